"""Weisfeiler-Leman kernels with subgraph-seeded colors, exact margins and linear MPNN gradient flow."""

from .graph import Graph, SizeCapError, disjoint_union, is_isomorphic_small
from .generators import LabeledDataset, basic, circulant, construction, er_dataset, regular_single_orbit
from .kernels import GramMatrix, SparseFeature, gram, k_wl, k_wloa, normalize, wl_feature, wloa_feature
from .margin import MarginResult, hard_margin, min_norm_point, separability_report
from .refinement import ColoringTrace, distinguishes, refine, refine_wl, refine_wlf
from .subgraphs import PatternSet, contains_induced_at, count_subgraphs, label_f, named_pattern

__version__ = "0.1.0"

__all__ = [
    "Graph", "SizeCapError", "disjoint_union", "is_isomorphic_small",
    "LabeledDataset", "basic", "circulant", "construction", "er_dataset", "regular_single_orbit",
    "GramMatrix", "SparseFeature", "gram", "k_wl", "k_wloa", "normalize", "wl_feature", "wloa_feature",
    "MarginResult", "hard_margin", "min_norm_point", "separability_report",
    "ColoringTrace", "distinguishes", "refine", "refine_wl", "refine_wlf",
    "PatternSet", "contains_induced_at", "count_subgraphs", "label_f", "named_pattern",
]
