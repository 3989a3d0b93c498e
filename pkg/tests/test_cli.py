"""Command line front end: exit codes, artifacts, determinism, the
builtin expression grammar."""

import filecmp
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from degenfrac import cli
from degenfrac.errors import ConfigError
from degenfrac.fracops import TimeWarp, warp_forward

LAMBDA1_HALF = 4.739066397843349  # closed-form route, beta = 0.5


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


# ---------------------------------------------------------------------------
# eigen

def test_eigen_artifacts(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["eigen", "--beta", "0.5", "--modes", "4",
                   "--out", str(out)])
    assert rc == 0
    header, rows = _read_csv(out / "eigenvalues.csv")
    assert header == ["k", "lambda"]
    assert len(rows) == 4 and rows[0][0] == "1"
    lam1 = float(rows[0][1])
    assert lam1 == pytest.approx(LAMBDA1_HALF, rel=2e-4)
    # values are written in full-precision scientific form
    assert "e" in rows[0][1] and len(rows[0][1].split(".")[1]) >= 17

    header, rows = _read_csv(out / "eigenfunctions.csv")
    assert header == ["x", "v1", "v2", "v3", "v4"]
    assert len(rows) == 64  # x_points default 65, x=0 dropped

    rep = json.loads((out / "orthogonality.json").read_text())
    assert rep["modes"] == 4
    assert rep["max_offdiag_l2"] <= 1e-6
    assert not any("time" in k or "date" in k for k in rep)


def test_eigen_bessel_oracle(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["eigen", "--beta", "0.5", "--modes", "4",
                   "--oracle", "bessel", "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "orthogonality.json").read_text())
    assert rep["cross_oracle_max_rel_delta"] <= 1e-4
    _, rows = _read_csv(out / "eigenvalues.csv")
    assert float(rows[0][1]) == pytest.approx(LAMBDA1_HALF, rel=1e-10)


def test_eigen_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["eigen", "--beta", "1.5", "--modes", "3",
                         "--out", str(out)]) == 0
    for name in ("eigenvalues.csv", "eigenfunctions.csv",
                 "orthogonality.json"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_json_artifacts_are_canonical(tmp_path):
    out = tmp_path / "o"
    cli.main(["eigen", "--beta", "0.5", "--modes", "2", "--out", str(out)])
    text = (out / "orthogonality.json").read_text()
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# exit codes

def test_degenerate_parameters_exit_2(tmp_path):
    assert cli.main(["eigen", "--beta", "1.0", "--modes", "2",
                     "--out", str(tmp_path)]) == 2
    assert cli.main(["eigen", "--beta", "2.0", "--modes", "2",
                     "--out", str(tmp_path)]) == 2
    assert cli.main(["solve", "--theta", "1.2", "--out", str(tmp_path)]) == 2


def test_usage_problems_exit_1(tmp_path):
    assert cli.main([]) == 1
    assert cli.main(["eigen", "--config", str(tmp_path / "nope.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("not_a_key = 3\n")
    assert cli.main(["eigen", "--config", str(bad)]) == 1
    bad.write_text("alpha = fast\n")
    assert cli.main(["eigen", "--config", str(bad)]) == 1
    bad.write_text("alpha 0.5\n")
    assert cli.main(["eigen", "--config", str(bad)]) == 1
    assert cli.main(["eigen", "--modes", "auto",
                     "--out", str(tmp_path)]) == 1


def test_auto_modes_kmax_exhaustion_exit_3(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("kmax = 8\nf = one\n")
    rc = cli.main(["solve", "--config", str(cfgf), "--modes", "auto",
                   "--tol", "1e-13", "--out", str(tmp_path / "o")])
    assert rc == 3


# ---------------------------------------------------------------------------
# config files

def test_config_file_with_overrides(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text(
        "# leading comment\n"
        "\n"
        "beta = 0.3   # trailing comment\n"
        "modes = 3\n")
    out = tmp_path / "o"
    rc = cli.main(["eigen", "--config", str(cfgf), "--beta", "0.5",
                   "--out", str(out)])
    assert rc == 0
    _, rows = _read_csv(out / "eigenvalues.csv")
    assert len(rows) == 3  # modes from the file
    assert float(rows[0][1]) == pytest.approx(LAMBDA1_HALF, rel=2e-4)


def test_load_config_types(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("alpha = 0.25\nmodes = auto\nfd_nx = 128\nphi = sin:2\n")
    cfg = cli.load_config(cfgf)
    assert cfg.alpha == 0.25
    assert cfg.modes == "auto"
    assert cfg.fd_nx == 128
    assert cfg.phi == "sin:2"
    assert cfg.beta == 0.5  # untouched default


# ---------------------------------------------------------------------------
# solve

def test_solve_classical(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["solve", "--beta", "0.5", "--modes", "6",
                   "--out", str(out)])
    assert rc == 0
    header, rows = _read_csv(out / "solution.csv")
    assert header[0] == "t" and len(header) == 66
    assert len(rows) == 17
    diags = json.loads((out / "diagnostics.json").read_text())
    assert diags["regime"] == "classical"
    assert diags["residual"]["kind"] == "strong"
    assert diags["residual"]["sup_rel"] <= 1e-3
    assert diags["tail"]["tail_estimate_l2"] >= 0.0


def test_solve_weak_regime(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["solve", "--beta", "1.5", "--modes", "6",
                   "--out", str(out)])
    assert rc == 0
    diags = json.loads((out / "diagnostics.json").read_text())
    assert diags["regime"] == "weak"
    assert diags["residual"]["kind"] == "weak"


def test_solve_auto_modes(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["solve", "--beta", "0.5", "--modes", "auto",
                   "--tol", "1e-4", "--out", str(out)])
    assert rc == 0
    diags = json.loads((out / "diagnostics.json").read_text())
    assert diags["modes"] >= 4
    assert diags["tail"]["tail_estimate_l2"] <= 1e-4


def test_solve_json_format(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["solve", "--beta", "0.5", "--modes", "4",
                   "--format", "json", "--out", str(out)])
    assert rc == 0
    sol = json.loads((out / "solution.json").read_text())
    assert len(sol["t"]) == 17 and len(sol["x"]) == 65
    assert len(sol["u"]) == 17 and len(sol["u"][0]) == 65


# ---------------------------------------------------------------------------
# verify / convergence

def test_verify_all_suites_pass(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["verify", "--beta", "0.5", "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "verify.json").read_text())
    assert rep["all_pass"] is True
    assert set(rep["suites"]) == {"ml_recurrence", "orthogonality",
                                  "kernel_equivalence", "flux_limit",
                                  "uniqueness", "spectral_vs_fd"}
    assert all(s["pass"] for s in rep["suites"].values())


def test_verify_impossible_tol_exits_4(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["verify", "--beta", "0.5", "--tol", "0",
                   "--out", str(out)])
    assert rc == 4
    rep = json.loads((out / "verify.json").read_text())
    assert rep["all_pass"] is False


def test_convergence_ladders(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("modes_ladder = 2,4,8\nmesh_ladder = 32,64\n")
    out = tmp_path / "o"
    rc = cli.main(["convergence", "--config", str(cfgf), "--beta", "0.5",
                   "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "convergence.json").read_text())
    assert all(o > 1.0 for o in rep["modes_orders"])
    assert rep["mesh_err_l2_rel"][1] < rep["mesh_err_l2_rel"][0]
    assert (out / "convergence_modes.csv").is_file()
    assert (out / "convergence_mesh.csv").is_file()


def test_convergence_bad_ladder_exit_1(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("modes_ladder = 8\n")
    assert cli.main(["convergence", "--config", str(cfgf),
                     "--out", str(tmp_path / "o")]) == 1


# ---------------------------------------------------------------------------
# expression grammar

def test_space_expr_profiles():
    assert cli.space_expr("quadratic")(0.25) == pytest.approx(0.1875)
    assert cli.space_expr("const:2.5")(np.array([0.1, 0.9])).tolist() == \
        [2.5, 2.5]
    assert cli.space_expr("sin:2")(0.25) == pytest.approx(1.0)
    assert cli.space_expr("poly:1,2")(0.5) == pytest.approx(2.0)
    assert np.all(cli.space_expr("zero")(np.array([0.3])) == 0.0)
    assert np.all(cli.space_expr("one")(np.array([0.3])) == 1.0)


def test_space_expr_mode_profile(eig):
    sys_ = eig(0.5, 3)
    fn = cli.space_expr("mode:2", sys_)
    x = np.array([0.3, 0.7])
    assert np.allclose(fn(x), sys_.eigen_eval(2, x)[0])
    with pytest.raises(ConfigError):
        cli.space_expr("mode:2")  # no system available
    with pytest.raises(ConfigError):
        cli.space_expr("mode:9", sys_)


def test_space_expr_errors():
    with pytest.raises(ConfigError):
        cli.space_expr("gauss")
    with pytest.raises(ConfigError):
        cli.space_expr("poly:a,b")


def test_time_expr_factors():
    warp = TimeWarp(0.3, 0.5)
    assert cli.time_expr("one", warp)(7.0) == 1.0
    assert cli.time_expr("const:3", warp)(7.0) == 3.0
    assert cli.time_expr("sin:2", warp)(0.5) == pytest.approx(math.sin(1.0))
    assert cli.time_expr("poly:0,1", warp)(2.5) == pytest.approx(2.5)
    assert cli.time_expr("spow:1", warp)(1.5) == \
        pytest.approx(warp_forward(warp, 1.5))
    with pytest.raises(ConfigError):
        cli.time_expr("spow:-1", warp)
    with pytest.raises(ConfigError):
        cli.time_expr("tanh", warp)


def test_source_expr_forms():
    warp = TimeWarp(0.0, 0.0)
    assert cli.source_expr("none", warp) is None
    assert cli.source_expr("", warp) is None
    bare = cli.source_expr("one", warp)
    assert bare(0.3, 99.0) == pytest.approx(1.0)
    sep = cli.source_expr("sep:sin:1|cos:3", warp)
    assert sep(0.25, 0.5) == pytest.approx(
        math.sin(math.pi * 0.25) * math.cos(1.5))
    with pytest.raises(ConfigError):
        cli.source_expr("sep:sin:1", warp)  # missing time factor


# ---------------------------------------------------------------------------
# installed entry point

def test_console_script_help():
    proc = subprocess.run(["degenfrac", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    assert "eigen" in proc.stdout and "solve" in proc.stdout
