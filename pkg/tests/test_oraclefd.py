"""Finite-volume / L1 reference solver and field comparison."""

import math

import numpy as np
import pytest

from degenfrac.errors import DomainError, ResolutionError
from degenfrac.fracops import warp_forward
from degenfrac.oraclefd import FDMesh, compare, fd_solve
from degenfrac.solver import ProblemSpec, SolutionField
from degenfrac.special import ml_eval


def test_mesh_build_defaults():
    m = FDMesh.build(0.5, 0.6, 1.0, nx=64, nt=32)
    assert m.nx == 64 and m.nt == 32
    assert m.x[0] == 0.0 and m.x[-1] == 1.0
    assert m.s[0] == 0.0 and m.s[-1] == pytest.approx(1.0)
    assert np.all(np.diff(m.x) > 0) and np.all(np.diff(m.s) > 0)
    # grading compresses toward the degenerate endpoint / startup layer
    assert m.x[1] < 1.0 / 64
    assert m.s[1] < 1.0 / 32


def test_mesh_build_validation():
    with pytest.raises(ResolutionError):
        FDMesh.build(0.5, 0.6, 1.0, nx=4, nt=32)
    with pytest.raises(ResolutionError):
        FDMesh.build(0.5, 0.6, 1.0, nx=64, nt=2)
    with pytest.raises(DomainError):
        FDMesh.build(0.5, 0.6, 0.0)


def test_mesh_array_validation():
    good_x = np.linspace(0.0, 1.0, 9)
    good_s = np.linspace(0.0, 1.0, 9)
    with pytest.raises(DomainError):
        FDMesh(good_x[::-1].copy(), good_s, 1.0, 1.0)
    with pytest.raises(DomainError):
        FDMesh(good_x + 0.1, good_s, 1.0, 1.0)  # does not start at 0
    with pytest.raises(DomainError):
        FDMesh(good_x * 0.5, good_s, 1.0, 1.0)  # does not end at 1
    with pytest.raises(DomainError):
        FDMesh(good_x, good_s[:2], 1.0, 1.0)


def _spec(beta, phi, f=None, alpha=0.6, theta=0.3, a=0.0, T=1.0):
    return ProblemSpec(alpha, theta, beta, a, T, phi, f)


def test_zero_data_stays_zero():
    spec = _spec(0.5, lambda x: 0.0 * np.asarray(x))
    fld = fd_solve(spec, FDMesh.build(0.5, 0.6, 1.0, nx=32, nt=16))
    assert np.max(np.abs(fld.values)) == 0.0
    assert fld.diagnostics["method"] == "fd_l1_fv"


def test_first_row_is_initial_profile():
    spec = _spec(1.5, lambda x: np.asarray(x) * (1.0 - np.asarray(x)))
    mesh = FDMesh.build(1.5, 0.6, 1.0, nx=48, nt=16)
    fld = fd_solve(spec, mesh)
    assert fld.t_grid[0] == 0.0
    inner = slice(1, -1)
    x = fld.x_grid[inner]
    assert np.max(np.abs(fld.values[0, inner] - x * (1.0 - x))) <= 1e-9
    assert fld.values[0, -1] == 0.0


def test_sup_norm_never_grows():
    spec = _spec(0.5, lambda x: np.sin(np.pi * np.asarray(x)))
    fld = fd_solve(spec, FDMesh.build(0.5, 0.6, 1.0, nx=96, nt=64))
    peaks = np.max(np.abs(fld.values), axis=1)
    assert np.all(np.diff(peaks) <= 1e-12)


@pytest.mark.parametrize("beta", [0.5, 1.5])
def test_single_mode_matches_relaxation_kernel(beta, eig):
    sys = eig(beta, 1)
    lam = float(sys.lambdas[0])
    spec = _spec(beta, lambda x: sys.eigen_eval(1, x)[0])
    mesh = FDMesh.build(beta, spec.alpha, warp_forward(spec.warp, spec.T),
                        nx=160, nt=160)
    fld = fd_solve(spec, mesh)
    sT = warp_forward(spec.warp, spec.T)
    amp = ml_eval(spec.alpha, 1.0,
                  -lam / spec.warp.p ** spec.alpha * sT ** spec.alpha)
    inner = fld.x_grid[1:-1]
    ref = amp * sys.eigen_eval(1, inner)[0]
    err = np.max(np.abs(fld.values[-1, 1:-1] - ref))
    assert err <= 5e-3 * np.max(np.abs(ref))


def test_alpha_one_is_backward_euler_heat(eig):
    # exact solution decays by e^{-lam}; time error is first order, so
    # check the halving under refinement rather than a tight one-off value
    sys = eig(0.5, 1)
    lam = float(sys.lambdas[0])
    spec = ProblemSpec(1.0, 0.0, 0.5, 0.0, 1.0,
                       lambda x: sys.eigen_eval(1, x)[0])
    errs = []
    for nx, nt in ((160, 256), (320, 512)):
        fld = fd_solve(spec, FDMesh.build(0.5, 1.0, 1.0, nx=nx, nt=nt))
        ref = math.exp(-lam) * sys.eigen_eval(1, fld.x_grid[1:-1])[0]
        errs.append(np.max(np.abs(fld.values[-1, 1:-1] - ref)))
    assert errs[1] <= 0.6 * errs[0]
    assert errs[1] <= 4e-4


def test_nonzero_start_matches_relaxation_kernel(eig):
    sys = eig(0.5, 1)
    lam = float(sys.lambdas[0])
    spec = _spec(0.5, lambda x: sys.eigen_eval(1, x)[0],
                 alpha=0.5, theta=0.3, a=0.5, T=1.5)
    S = warp_forward(spec.warp, spec.T)
    fld = fd_solve(spec, FDMesh.build(0.5, 0.5, S, nx=128, nt=128))
    amp = ml_eval(0.5, 1.0, -lam / spec.warp.p ** 0.5 * S ** 0.5)
    ref = amp * sys.eigen_eval(1, fld.x_grid[1:-1])[0]
    err = np.max(np.abs(fld.values[-1, 1:-1] - ref))
    assert fld.t_grid[0] == pytest.approx(0.5)
    assert fld.t_grid[-1] == pytest.approx(1.5)
    assert err <= 1e-2 * np.max(np.abs(ref))


def test_manufactured_solution_refines():
    # u = s^2 sin(pi x): source assembled from the two operator pieces
    beta, alpha, theta = 0.75, 0.6, 0.2
    p = 1.0 - theta
    c_t = p ** alpha * 2.0 / math.gamma(3.0 - alpha)

    def u_exact(x, s):
        return s * s * np.sin(np.pi * x)

    def f(x, t):
        s = t ** p
        xt = np.asarray(x, dtype=float)
        spat = (np.pi ** 2 * xt ** beta * np.sin(np.pi * xt)
                - np.pi * beta * xt ** (beta - 1.0) * np.cos(np.pi * xt))
        return np.sin(np.pi * xt) * c_t * s ** (2.0 - alpha) + s * s * spat

    spec = ProblemSpec(alpha, theta, beta, 0.0, 1.0,
                       lambda x: 0.0 * np.asarray(x), f)
    errs = []
    for n in (64, 128):
        fld = fd_solve(spec, FDMesh.build(beta, alpha, 1.0, nx=n, nt=n))
        ref = u_exact(fld.x_grid, 1.0)
        errs.append(np.max(np.abs(fld.values[-1] - ref)))
    assert errs[1] <= 0.55 * errs[0]  # at least first-order refinement
    assert errs[1] <= 5e-3


def _tiny_field(tg):
    xg = np.linspace(0.0, 1.0, 5)
    vals = np.ones((len(tg), 5))
    return SolutionField(xg, np.asarray(tg, dtype=float), vals, 0,
                         "classical", {})


def test_compare_self_is_zero():
    fld = _tiny_field([0.0, 0.5, 1.0])
    rep = compare(fld, fld)
    assert rep.max_l2_rel == 0.0 and rep.max_sup_rel == 0.0
    assert rep.t.shape == (3,)


def test_compare_validation():
    a = _tiny_field([0.0, 0.5, 1.0])
    b = _tiny_field([2.0, 3.0])
    with pytest.raises(DomainError):
        compare(a, b)
    with pytest.raises(DomainError):
        compare(a, a, t_subset=[5.0])


def test_compare_interpolates_between_grids():
    a = _tiny_field([0.0, 1.0])
    xg = np.linspace(0.0, 1.0, 9)
    b = SolutionField(xg, np.array([0.0, 1.0]), 2.0 * np.ones((2, 9)), 0,
                      "classical", {})
    rep = compare(a, b)
    assert rep.max_sup_rel == pytest.approx(1.0)
    assert rep.max_l2_rel == pytest.approx(1.0)
