import json
import subprocess
import sys

import numpy as np
import pytest

from hotw.cli import CSV_HEADER, EXIT_CONFIG, EXIT_OK, EXIT_UNRESOLVED, RunConfig, fmt, main
from hotw.exceptions import InvalidArgumentError
from oracles import airy_det, local_maxima


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


@pytest.fixture(scope="module")
def dist_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("dist")
    out, plot = d / "f0.csv", d / "f0.gp"
    code = main(["dist", "--k", "0", "--out", str(out), "--cache-dir", str(d / "cache"),
                 "--emit-plot", str(plot)])
    return d, out, plot, code


def test_dist_rows(dist_run):
    d, out, plot, code = dist_run
    assert code == EXIT_OK
    rows = _read_csv(out)
    assert rows.shape == (91, 4)
    assert np.allclose(rows[:, 0], np.round(np.arange(-6, 3.0001, 0.1), 12), atol=1e-12)
    assert np.all(np.diff(rows[:, 1]) >= -1e-10)
    i = int(np.argmin(np.abs(rows[:, 0] + 3)))
    assert abs(rows[i, 1] - airy_det(-3.0)) < 1e-8
    text = out.read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")


def test_plot_script(dist_run):
    _, out, plot, _ = dist_run
    script = plot.read_text()
    assert "set datafile separator ','" in script and str(out) in script


def test_warm_cache_identical(dist_run):
    d, out, _, _ = dist_run
    again = d / "again.csv"
    assert main(["dist", "--k", "0", "--out", str(again), "--cache-dir", str(d / "cache")]) == EXIT_OK
    assert again.read_bytes() == out.read_bytes()


def test_json_format(tmp_path):
    out = tmp_path / "f.json"
    assert main(["dist", "--k", "1", "--s-min", "-1", "--s-max", "1", "--step", "0.5",
                 "--format", "json", "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["grid"] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert set(rep["rows"][0]) == {"s", "F", "density", "err_est"}


def test_inflected_two_maxima(tmp_path):
    out = tmp_path / "infl.csv"
    # the kernel for these t is accurate to about 1e-11, so ask for 1e-10
    assert main(["dist", "--k", "1", "--t", "0,-3", "--s-min", "-5", "--s-max", "4",
                 "--step", "0.02", "--det-tol", "1e-10", "--out", str(out)]) == EXIT_OK
    d = _read_csv(out)[:, 2]
    assert len(local_maxima(d, 1e-6)) == 2


def test_config_errors(tmp_path, capsys):
    assert main(["dist", "--k", "1", "--t", "0.5"]) == EXIT_CONFIG
    assert main(["dist", "--step", "0"]) == EXIT_CONFIG
    assert main(["dist", "--rh-tol", "1e-15"]) == EXIT_CONFIG
    assert main(["nope"]) == EXIT_CONFIG
    assert "invalid configuration" in capsys.readouterr().err
    with pytest.raises(InvalidArgumentError):
        RunConfig("dist", s_min=1.0, s_max=0.0)


def test_unresolved_exit(tmp_path):
    out = tmp_path / "u.csv"
    code = main(["dist", "--k", "1", "--s-min", "-6", "--s-max", "-6", "--det-tol", "1e-13",
                 "--m-cap", "40", "--out", str(out)])
    assert code == EXIT_UNRESOLVED
    assert np.isnan(_read_csv(out)[0, 3])


def test_limit_monotone(tmp_path):
    out = tmp_path / "lim.csv"
    assert main(["limit", "--out", str(out)]) == EXIT_OK
    rows = _read_csv(out)
    assert rows[0, 0] == -0.5 and rows[-1, 0] == 0.95
    assert np.all(np.diff(rows[:, 1]) >= -1e-10)


def test_tail_report_keys(tmp_path):
    out = tmp_path / "tail.json"
    main(["tail", "--k", "0", "--out", str(out)])
    rep = json.loads(out.read_text())
    assert {"slope", "grid", "err_components"} <= set(rep)
    assert rep["expected_slope"] == 1.5


def test_chi_report_keys(tmp_path):
    out = tmp_path / "chi.json"
    code = main(["chi", "--k", "0", "--s-min", "-2", "--out", str(out)])
    rep = json.loads(out.read_text())
    assert {"chi", "err_components", "slope", "grid"} <= set(rep)
    assert code == EXIT_UNRESOLVED or rep["converged"]


def test_fmt():
    assert fmt(0.1) == "0.1" and fmt(float("nan")) == "nan"
    assert fmt(np.pi) == "3.141592653589793"


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "hotw.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "dist" in r.stdout
