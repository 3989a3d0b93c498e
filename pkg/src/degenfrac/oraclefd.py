"""Finite-difference reference solver for the degenerate time-fractional
mixed problem, independent of the spectral route.

Time: L1 product-integration of the Caputo derivative in the warped
variable s = t^p - a^p, scaled by p^alpha to realize the hyper-Bessel
operator; implicit stepping.  Space: conservative finite volumes with the
exact two-point transmissibility 1 / int x^{-beta} dx, which reproduces
constant-flux profiles (hence the x^{1-beta} endpoint behavior) exactly.
For beta > 1 the x = 0 face carries zero flux (the degenerate-limit
boundary behavior) and the first interior face uses the bounded-branch
closure u ~ A + B x^{2-beta}, because the harmonic integral diverges
there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, ResolutionError, SolverError
from .fracops import warp_forward
from .solver import ProblemSpec, SolutionField, _eval_vec
from .spectral import bc_requirements, grading_exponent

__all__ = ["FDMesh", "fd_solve", "compare", "CompareReport"]


@dataclass(frozen=True)
class FDMesh:
    """Graded space/time mesh for the reference solver."""

    x: np.ndarray
    s: np.ndarray
    grade_x: float
    grade_s: float

    def __post_init__(self):
        for name, arr, lo in (("x", self.x, 0.0), ("s", self.s, 0.0)):
            if arr.ndim != 1 or arr.size < 3:
                raise DomainError(f"{name} nodes must be a 1-d array")
            if arr[0] != lo or not np.all(np.diff(arr) > 0.0):
                raise DomainError(f"{name} nodes must increase from {lo}")
        if self.x[-1] != 1.0:
            raise DomainError("last spatial node must be 1")

    @property
    def nx(self) -> int:
        return self.x.size - 1

    @property
    def nt(self) -> int:
        return self.s.size - 1

    @classmethod
    def build(cls, beta: float, alpha: float, s_final: float,
              nx: int = 512, nt: int = 512,
              grade_x: Optional[float] = None,
              grade_s: Optional[float] = None) -> "FDMesh":
        """Standard graded mesh: x_i = (i/nx)^{gx} toward the degenerate
        endpoint, s_j = s_final (j/nt)^{gs} toward the initial time (to
        resolve the weakly singular startup layer)."""
        if s_final <= 0.0:
            raise DomainError(f"need a positive time horizon, got {s_final}")
        if nx < 8 or nt < 4:
            raise ResolutionError(f"mesh {nx}x{nt} too coarse")
        gx = grading_exponent(beta) if grade_x is None else float(grade_x)
        gs = min(2.0 / alpha, 4.0) if grade_s is None else float(grade_s)
        x = np.linspace(0.0, 1.0, nx + 1) ** gx
        s = s_final * np.linspace(0.0, 1.0, nt + 1) ** gs
        return cls(x, s, gx, gs)


def _transmissibilities(beta: float, x: np.ndarray) -> np.ndarray:
    """Face coupling tau_i between nodes i and i+1, from the exact
    integral of the resistivity x^{-beta} (constant-flux exact)."""
    e = 1.0 - beta
    with np.errstate(divide="ignore"):
        tau = e / (x[1:] ** e - x[:-1] ** e)
    if beta > 1.0:
        # the integral from 0 diverges; close the first face from the
        # bounded local branch A + B x^{2-beta}, whose flux at the face
        # midpoint x_1/2 is (2-beta) (x_1/2) (u_1-u_0) / x_1^{2-beta}
        tau[0] = (2.0 - beta) * 0.5 * x[1] / x[1] ** (2.0 - beta)
    return tau


def _l1_gammas(s: np.ndarray, n: int, alpha: float) -> np.ndarray:
    """Coefficients gamma_j of the L1 rule at step n:
    Caputo_s u(s_n) ~ sum_j gamma_j (u^{j+1} - u^j), j = 0..n-1."""
    if alpha == 1.0:
        g = np.zeros(n)
        g[-1] = 1.0 / (s[n] - s[n - 1])
        return g
    e = 1.0 - alpha
    d = s[n] - s[:n]
    ds = np.diff(s[: n + 1])
    with np.errstate(divide="ignore"):
        # d^e - (d-ds)^e without cancellation on thin graded cells
        b = d ** e * (-np.expm1(e * np.log1p(-ds / d)))
    b[-1] = ds[-1] ** e
    return b / (ds * math.gamma(2.0 - alpha))


def fd_solve(spec: ProblemSpec, mesh: FDMesh) -> SolutionField:
    """March the implicit L1 / finite-volume scheme over the mesh.

    Returns a SolutionField whose first time row is the initial profile
    at t = a; no spectral mode data is attached."""
    bc = bc_requirements(spec.beta)
    x, s = mesh.x, mesh.s
    warp = spec.warp
    p, al = warp.p, spec.alpha
    pa = p ** al
    S_T = warp_forward(warp, spec.T)
    if s[-1] > S_T * (1.0 + 1e-12):
        raise DomainError("mesh time horizon exceeds the problem horizon")

    tau = _transmissibilities(spec.beta, x)
    h = np.diff(x)
    omega = np.empty(x.size)
    omega[0] = 0.5 * h[0]
    omega[-1] = 0.5 * h[-1]
    omega[1:-1] = 0.5 * (h[:-1] + h[1:])

    lo = 1 if spec.beta < 1.0 else 0  # Dirichlet at x=0 only when beta < 1
    idx = np.arange(lo, x.size - 1)
    m = idx.size
    # stiffness action rows for the unknowns: (A u)_i, scaled by 1/omega_i
    main = np.zeros(m)
    lower = np.zeros(m)
    upper = np.zeros(m)
    for r, i in enumerate(idx):
        left = tau[i - 1] if i > 0 else 0.0
        main[r] = (left + tau[i]) / omega[i]
        if r > 0:
            lower[r] = -tau[i - 1] / omega[i]
        if i + 1 <= x.size - 2:
            upper[r] = -tau[i] / omega[i]

    ap = warp.a ** p
    t_nodes = (s + ap) ** (1.0 / p)
    t_nodes[0] = warp.a
    if np.any(np.diff(t_nodes) <= 0.0):
        raise ResolutionError("time mesh collapses under the warp inverse; "
                              "reduce the time grading")

    # data callables live on the open interval; nudge the endpoint nodes
    xe = x.copy()
    xe[0] = x[1] * 1e-6
    xe[-1] = 1.0 - h[-1] * 1e-6

    u = np.zeros((s.size, x.size))
    u[0] = _eval_vec(spec.phi, xe)
    u[0, -1] = 0.0
    if spec.beta < 1.0:
        u[0, 0] = 0.0

    ab = np.zeros((3, m))
    for n in range(1, s.size):
        g = _l1_gammas(s, n, al)
        diag_t = pa * g[-1]
        rhs = pa * g[-1] * u[n - 1, idx]
        if n > 1 and al < 1.0:  # at alpha = 1 every history weight is zero
            hist = (np.diff(u[:n, :], axis=0) * g[:-1, None]).sum(axis=0)
            rhs -= pa * hist[idx]
        if spec.f is not None:
            rhs += _eval_vec(lambda xx: spec.f(xx, float(t_nodes[n])), xe)[idx]
        ab[0, 1:] = upper[:-1]
        ab[1] = main + diag_t
        ab[2, :-1] = lower[1:]
        try:
            sol = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise SolverError(f"tridiagonal solve failed at step {n}") from exc
        if not np.all(np.isfinite(sol)):
            raise SolverError(f"non-finite update at step {n}")
        u[n, idx] = sol
        u[n, -1] = 0.0
        if spec.beta < 1.0:
            u[n, 0] = 0.0

    return SolutionField(
        x_grid=x, t_grid=t_nodes, values=u, K=0, regime=spec.regime,
        diagnostics={
            "method": "fd_l1_fv",
            "nx": mesh.nx, "nt": mesh.nt,
            "grade_x": mesh.grade_x, "grade_s": mesh.grade_s,
            "left_condition": bc.left_condition,
        })


@dataclass
class CompareReport:
    t: np.ndarray
    l2_abs: np.ndarray
    l2_rel: np.ndarray
    sup_abs: np.ndarray
    sup_rel: np.ndarray

    @property
    def max_l2_rel(self) -> float:
        return float(np.max(self.l2_rel))

    @property
    def max_sup_rel(self) -> float:
        return float(np.max(self.sup_rel))


def _row_at(field: SolutionField, t: float) -> np.ndarray:
    tg = field.t_grid
    if t < tg[0] - 1e-12 or t > tg[-1] + 1e-12:
        raise DomainError(f"t={t} outside the field's time range")
    j = int(np.searchsorted(tg, t))
    j = min(max(j, 0), tg.size - 1)
    if abs(tg[j] - t) <= 1e-9 * (1.0 + abs(t)):
        return field.values[j]
    if j == 0 or abs(tg[j - 1] - t) <= 1e-9 * (1.0 + abs(t)):
        return field.values[max(j - 1, 0)]
    w = (t - tg[j - 1]) / (tg[j] - tg[j - 1])
    return (1.0 - w) * field.values[j - 1] + w * field.values[j]


def compare(reference: SolutionField, other: SolutionField,
            t_subset=None) -> CompareReport:
    """L2(0,1) and sup-norm differences at shared times, normalized by the
    reference field's norms (guarding zero rows)."""
    if t_subset is None:
        lo = max(reference.t_grid[0], other.t_grid[0])
        hi = min(reference.t_grid[-1], other.t_grid[-1])
        if not (hi >= lo):
            raise DomainError("fields share no time range")
        ts = reference.t_grid[(reference.t_grid >= lo - 1e-12)
                              & (reference.t_grid <= hi + 1e-12)]
    else:
        ts = np.asarray(t_subset, dtype=float)
    xs = reference.x_grid
    l2a, l2r, spa, spr = [], [], [], []
    for t in ts:
        ra = _row_at(reference, float(t))
        rb = np.interp(xs, other.x_grid, _row_at(other, float(t)))
        d = ra - rb
        l2d = math.sqrt(float(np.trapezoid(d * d, xs)))
        l2n = math.sqrt(float(np.trapezoid(ra * ra, xs)))
        sud = float(np.max(np.abs(d)))
        sun = float(np.max(np.abs(ra)))
        l2a.append(l2d)
        l2r.append(l2d / max(l2n, 1e-300))
        spa.append(sud)
        spr.append(sud / max(sun, 1e-300))
    return CompareReport(np.asarray(ts), np.asarray(l2a), np.asarray(l2r),
                         np.asarray(spa), np.asarray(spr))
