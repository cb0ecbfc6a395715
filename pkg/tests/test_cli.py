import math
import re
import subprocess
import sys

import pytest

from wlmargin.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _distances(text):
    return [(float(a), float(b)) for a, b in
            re.findall(r"normalized WL distance=(\S+) WL_F distance=(\S+)", text)]


def test_check_separator_pair(capsys):
    code, out, _ = run(capsys, "check", "--construction", "separator-pair", "--n", "16")
    assert code == 0
    d = _distances(out)
    assert len(d) == 6
    assert all(a == 0.0 and b == pytest.approx(math.sqrt(2), abs=1e-9) for a, b in d)


def test_check_with_triangles_on_triangle_free_pair(capsys):
    # C_16 and C_8 + C_8 have no triangles, so triangle labels separate nothing
    code, out, _ = run(capsys, "check", "--construction", "separator-pair", "--n", "16", "--patterns", "c3")
    assert code == 0
    assert all(a == 0.0 and b == 0.0 for a, b in _distances(out))
    code, out, _ = run(capsys, "check", "--construction", "separator-pair", "--n", "6", "--patterns", "c3")
    assert all(b == pytest.approx(math.sqrt(2)) for _, b in _distances(out))


def test_check_circulant_witness(capsys):
    code, out, _ = run(capsys, "check", "--construction", "circulant8", "--T", "1")
    assert code == 0
    assert "witness t=0" in out
    assert "margin growth condition: True" in out


def test_kernel_csv(tmp_path, capsys):
    out_file = tmp_path / "g.csv"
    code, out, _ = run(capsys, "kernel", "--construction", "separator-pair", "--n", "6", "--patterns", "c3",
                       "--T", "0", "--out", str(out_file))
    assert code == 0 and "2x2" in out
    assert out_file.read_text().split("\n")[1:3] == ["1,0", "0,1"]


def test_margin_command(tmp_path, capsys):
    code, out, _ = run(capsys, "margin", "--construction", "separability", "--n", "16", "--count", "4",
                       "--T", "2", "--out", str(tmp_path / "m.json"))
    assert code == 0 and "lambda=NLS" in out
    code, out, _ = run(capsys, "margin", "--construction", "separability", "--n", "16", "--count", "4",
                       "--patterns", "c12", "--T", "2", "--meb")
    lam = float(re.search(r"lambda=(\S+)", out).group(1))
    assert lam > 0 and "radius_meb" in out


def test_generate_round_trip(tmp_path, capsys):
    code, out, _ = run(capsys, "--seed", "3", "generate", "--construction", "er", "--n", "10", "--count", "12",
                       "--p", "0.3", "--target", "k4", "--out", str(tmp_path))
    assert code == 0 and "12 graphs" in out
    from wlmargin.io import load_tudataset
    assert len(load_tudataset(tmp_path, "er-k4-0.3").graphs) == 12


def test_cv_separability(capsys, tmp_path):
    code, out, _ = run(capsys, "cv", "--construction", "separability", "--n", "16", "--count", "60",
                       "--kernel", "wl", "--patterns", "c12", "--repetitions", "2", "--T-grid", "1,2",
                       "--out", str(tmp_path / "cv.csv"))
    assert code == 0
    assert "test 100.00 ± 0.00" in out
    m = re.search(r"margin (\S+)", out).group(1)
    assert float(m) > 0


def test_cv_tudataset(capsys):
    from pathlib import Path
    data = Path(__file__).resolve().parents[1] / "data"
    code, out, _ = run(capsys, "cv", "--tudataset", str(data), "--name", "MUTAG", "--repetitions", "1",
                       "--C-grid", "1", "--T-grid", "2")
    assert code == 0 and out.startswith("MUTAG wl")


def test_flow_short(capsys, tmp_path):
    code, out, _ = run(capsys, "flow", "--steps", "2000", "--stride", "500", "--out", str(tmp_path / "f.csv"))
    assert code == 0
    assert "gamma=1 support=[0, 1] spans=True" in out
    assert len((tmp_path / "f.csv").read_text().strip().split("\n")) == 2 + 5  # header lines, steps 0..2000


@pytest.mark.slow
def test_flow_long(capsys):
    code, out, _ = run(capsys, "flow", "--toy", "separable", "--steps", "200000", "--eta", "1e-2")
    assert code == 0
    assert float(re.search(r"ubar_alignment=(\S+)", out).group(1)) > 0.99


@pytest.mark.parametrize("argv", [
    ["check", "--construction", "separator-pair", "--n", "4"],
    ["check", "--construction", "nonsense", "--n", "8"],
    ["margin", "--construction", "separator-pair"],
    ["kernel", "--tudataset", "/nonexistent", "--name", "X"],
    ["kernel", "--construction", "separator-pair", "--n", "8", "--patterns", "q7"],
    ["cv", "--construction", "separability", "--n", "16", "--count", "8", "--C-grid", "a,b"],
    ["flow", "--toy", "other"],
])
def test_precondition_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


@pytest.mark.parametrize("argv,name", [
    (["kernel", "--construction", "shrink", "--n", "10", "--kernel", "wloa", "--T", "2"], "k.csv"),
    (["margin", "--construction", "circulant8", "--kernel", "wloa", "--patterns", "c3", "--T", "1"], "m.json"),
    (["cv", "--construction", "er", "--n", "12", "--count", "60", "--p", "0.2", "--patterns", "c3",
      "--repetitions", "1", "--folds", "5", "--min-class-size", "1", "--T-grid", "1", "--C-grid", "1"], "cv.csv"),
    (["flow", "--steps", "300", "--stride", "100"], "f.csv"),
])
def test_byte_identical_reruns(tmp_path, capsys, argv, name):
    outputs = []
    for i in range(2):
        path = tmp_path / f"{i}-{name}"
        code, out, _ = run(capsys, "--seed", "7", *argv, "--out", str(path))
        assert code == 0
        outputs.append((out, path.read_bytes()))
    assert outputs[0] == outputs[1]


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "wlmargin.cli", "check", "--construction", "separator-pair",
                          "--n", "6", "--T", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and "WL_F distance=1.41421356237" in res.stdout
