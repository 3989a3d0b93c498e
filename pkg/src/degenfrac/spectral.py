"""Degenerate Sturm-Liouville eigenproblem -(x^beta v')' = lambda v on (0, 1).

The diffusion coefficient x^beta vanishes at the left endpoint, which makes
the boundary-condition set depend on beta: for 0 < beta < 1 the problem takes
Dirichlet conditions at both ends, while for 1 < beta < 2 no condition at
x = 0 is needed (the finite-energy requirement selects the bounded branch).

Two independent eigenpair routes are provided: a weighted P1 Galerkin
discretization on a graded mesh, and a closed-form candidate built from
Bessel functions that self-validates through an explicit residual check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import sparse
from scipy import special as sp
from scipy.sparse.linalg import eigsh

from .errors import DegeneracyError, DomainError, ResolutionError, SolverError
from .special import bessel_j_zero

__all__ = [
    "LEFT_DIRICHLET",
    "LEFT_NONE",
    "BCDescriptor",
    "EigenSystem",
    "bc_requirements",
    "solve_eigen",
    "bessel_eigen",
    "FluxLimitReport",
    "flux_limit_check",
    "OrthogonalityReport",
    "orthogonality_report",
]

LEFT_DIRICHLET = "dirichlet_at_zero"
LEFT_NONE = "none_at_zero"

_DEFAULT_MESH_N = 2048


def _check_beta(beta: float) -> None:
    if beta == 1.0:
        raise DegeneracyError("beta = 1 (log-degenerate case) is not supported")
    if not (0.0 < beta < 2.0):
        raise DomainError(f"beta must lie in (0, 2), got {beta}")


@dataclass(frozen=True)
class BCDescriptor:
    """Boundary-condition dispatch for a given degeneracy exponent."""

    beta: float
    left_condition: str
    right_condition: str = "dirichlet_at_one"
    nu_range: Tuple[int, ...] = ()


def bc_requirements(beta: float) -> BCDescriptor:
    """Which boundary conditions the problem needs for this beta."""
    _check_beta(beta)
    if beta < 1.0:
        return BCDescriptor(beta, LEFT_DIRICHLET, nu_range=(0,))
    return BCDescriptor(beta, LEFT_NONE, nu_range=())


def grading_exponent(beta: float) -> float:
    # capped: beyond ~20 the first graded nodes underflow toward zero and
    # x^{1-beta} overflows the sparse factorization for beta near 2
    return min(2.0 / (2.0 - beta), 20.0)


def _graded_mesh(beta: float, n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1) ** grading_exponent(beta)


class EigenSystem:
    """First K eigenpairs, L2(0,1)-orthonormal, lambdas ascending.

    eigen_eval(k, x) returns (v_k(x), v_k'(x)) for 1-based k; x in (0, 1].
    Derivatives of eigenfunctions blow up at x = 0, so the evaluator is
    only guaranteed away from the degenerate endpoint.
    """

    def __init__(self, beta, lambdas, method_tag, payload):
        self.beta = float(beta)
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.method_tag = method_tag
        self._payload = payload

    @property
    def count(self) -> int:
        return self.lambdas.size

    def _check_k(self, k: int) -> None:
        if not (1 <= k <= self.count):
            raise DomainError(f"mode index must be in 1..{self.count}, got {k}")

    def eigen_eval(self, k: int, x):
        self._check_k(k)
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise DomainError("evaluation points must lie in [0, 1]")
        if self.method_tag == "galerkin_numeric":
            chart, cnodes, vecs, slopes = self._payload
            if chart == "x":
                v = np.interp(x, cnodes, vecs[k - 1])
                idx = np.clip(np.searchsorted(cnodes, x, side="right") - 1,
                              0, slopes.shape[1] - 1)
                return v, slopes[k - 1][idx]
            # subcritical chart: the element is linear in y = x^{1-beta},
            # so v' carries the exact x^{-beta} factor
            e = 1.0 - self.beta
            y = x ** e
            v = np.interp(y, cnodes, vecs[k - 1])
            idx = np.clip(np.searchsorted(cnodes, y, side="right") - 1,
                          0, slopes.shape[1] - 1)
            with np.errstate(divide="ignore"):
                xw = np.where(x > 0.0, x, 1.0) ** (-self.beta)
            vp = slopes[k - 1][idx] * e * xw
            if np.any(x == 0.0):
                vp = np.where(x > 0.0, vp,
                              np.inf * np.sign(slopes[k - 1][0]))
            return v, vp
        nu, zeros, coefs = self._payload
        return _bessel_mode_eval(self.beta, nu, zeros[k - 1], coefs[k - 1], x)

    def mode(self, k: int):
        """Convenience: a pair-evaluator x -> (v_k, v_k') for one mode."""
        self._check_k(k)
        return lambda x: self.eigen_eval(k, x)

    def basis_matrix(self, x) -> np.ndarray:
        """All eigenfunctions on x at once, shape (K, len(x))."""
        x = np.asarray(x, dtype=float)
        return np.vstack([self.eigen_eval(k, x)[0] for k in
                          range(1, self.count + 1)])

    def mesh_x(self) -> np.ndarray:
        """Graded x-mesh underlying the discretization (the default graded
        mesh for the closed-form route); useful as a quadrature partition."""
        if self.method_tag == "galerkin_numeric":
            chart, cnodes, _, _ = self._payload
            if chart == "x":
                return cnodes.copy()
            return cnodes ** (1.0 / (1.0 - self.beta))
        return _graded_mesh(self.beta, _DEFAULT_MESH_N)


def _assemble_p1(beta: float, nodes: np.ndarray):
    """Tridiagonal stiffness (weight x^beta, exact per cell) and consistent
    mass matrices over all mesh nodes, for hats linear in x."""
    h = np.diff(nodes)
    xpow = (nodes[1:] ** (beta + 1.0) - nodes[:-1] ** (beta + 1.0)) / (beta + 1.0)
    ks = xpow / h ** 2  # cell value of int x^beta * phi'_i phi'_j, up to sign
    n = nodes.size
    s_main = np.zeros(n)
    s_main[:-1] += ks
    s_main[1:] += ks
    m_main = np.zeros(n)
    m_main[:-1] += h / 3.0
    m_main[1:] += h / 3.0
    s_off = -ks
    m_off = h / 6.0
    S = sparse.diags([s_off, s_main, s_off], [-1, 0, 1], format="csc")
    M = sparse.diags([m_off, m_main, m_off], [-1, 0, 1], format="csc")
    return S, M


def _assemble_p1_ychart(beta: float, ynodes: np.ndarray):
    """Stiffness and mass for hat functions linear in y = x^{1-beta}
    (subcritical regime).

    Pulling the weak form over to y turns the weighted stiffness integral
    into (1-beta)/dy per cell -- exact -- and the mass integral into moments
    of y^{beta/(1-beta)}, also exact.  Working in this chart matters because
    the eigenfunctions behave like x^{1-beta} near the degenerate endpoint,
    which is linear in y and hence inside the trial space.
    """
    e = 1.0 - beta
    sigma = beta / e
    yl, yr = ynodes[:-1], ynodes[1:]
    dy = yr - yl
    ks = e / dy
    s = sigma + 1.0
    mu0 = (yr ** s - yl ** s) / s
    mu1 = (yr ** (s + 1.0) - yl ** (s + 1.0)) / (s + 1.0)
    mu2 = (yr ** (s + 2.0) - yl ** (s + 2.0)) / (s + 2.0)
    den = e * dy * dy
    mll = (yr * yr * mu0 - 2.0 * yr * mu1 + mu2) / den
    mlr = ((yl + yr) * mu1 - yl * yr * mu0 - mu2) / den
    mrr = (mu2 - 2.0 * yl * mu1 + yl * yl * mu0) / den
    n = ynodes.size
    s_main = np.zeros(n)
    s_main[:-1] += ks
    s_main[1:] += ks
    m_main = np.zeros(n)
    m_main[:-1] += mll
    m_main[1:] += mrr
    S = sparse.diags([-ks, s_main, -ks], [-1, 0, 1], format="csc")
    M = sparse.diags([mlr, m_main, mlr], [-1, 0, 1], format="csc")
    return S, M


def solve_eigen(beta: float, K: int, mesh: int = _DEFAULT_MESH_N) -> EigenSystem:
    """First K eigenpairs by weighted P1 Galerkin on a mesh graded toward
    the degenerate endpoint (x_i = (i/N)^{2/(2-beta)}).

    For beta > 1 the hats are linear in x.  For beta < 1 they are linear in
    y = x^{1-beta} on the same node set; a basis linear in x cannot resolve
    the x^{1-beta} endpoint behavior of the eigenfunctions at any practical
    mesh size, while in the y chart that behavior is represented exactly and
    the graded nodes equidistribute the local oscillation phase.
    """
    _check_beta(beta)
    if K < 1:
        raise DomainError("need K >= 1")
    n = int(mesh)
    if n < 8 * K:
        raise ResolutionError(f"mesh with {n} cells too coarse for K={K}")
    if beta < 1.0:
        e = 1.0 - beta
        cnodes = np.linspace(0.0, 1.0, n + 1) ** (grading_exponent(beta) * e)
        S, M = _assemble_p1_ychart(beta, cnodes)
        sl = slice(1, n)  # Dirichlet at both endpoints
        chart = "y"
    else:
        cnodes = _graded_mesh(beta, n)
        S, M = _assemble_p1(beta, cnodes)
        sl = slice(0, n)  # no condition at x=0, Dirichlet at x=1
        chart = "x"
    A = S[sl, sl]
    # fixed start vector: ARPACK's internal random one changes between
    # calls in a process, which breaks byte-reproducible artifacts
    v0 = np.full(A.shape[0], 1.0 / math.sqrt(A.shape[0]))
    vals, vecs = eigsh(A, k=K, M=M[sl, sl], sigma=0.0, which="LM", v0=v0)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0.0 or np.any(np.diff(vals) <= 0.0):
        raise SolverError("eigenvalues not positive simple ascending")
    h = np.diff(cnodes)
    if chart == "x":
        indicator = vals[-1] * np.max(h) ** 2 / 12.0
    else:
        # local phase^2 of -(1-beta)^2 w'' = lambda y^{beta/(1-beta)} w
        sigma = beta / (1.0 - beta)
        indicator = (vals[-1] * np.max(h ** 2 * cnodes[1:] ** sigma)
                     / (12.0 * (1.0 - beta) ** 2))
    if indicator > 2e-3:
        raise ResolutionError(
            f"lambda_{K} ~ {vals[-1]:.3g} not resolved on this mesh; "
            "increase the mesh parameter")
    full = np.zeros((K, n + 1))
    full[:, sl] = vecs.T
    for i in range(K):
        v = full[i]
        v /= math.sqrt(float(v @ (M @ v)))
        if v[-2] < 0.0:  # v(1) = 0, so the sign at the last interior node
            v *= -1.0    # fixes the sign of v'(1)
    slopes = np.diff(full, axis=1) / h
    return EigenSystem(beta, vals, "galerkin_numeric",
                       (chart, cnodes, full, slopes))


def _bessel_mode_eval(beta, nu, jz, coef, x):
    """(v, v') for v = coef * x^p J_nu(jz * x^q), p=(1-beta)/2, q=(2-beta)/2."""
    p = 0.5 * (1.0 - beta)
    q = 0.5 * (2.0 - beta)
    x = np.asarray(x, dtype=float)
    pos = x > 0.0
    xs = np.where(pos, x, 1.0)
    w = jz * xs ** q
    J = sp.jv(nu, w)
    Jp = sp.jvp(nu, w)
    v = coef * xs ** p * J
    vp = coef * (p * xs ** (p - 1.0) * J + jz * q * xs ** (p + q - 1.0) * Jp)
    if np.any(~pos):
        # limits at the degenerate endpoint: v -> 0 (beta < 1) or the finite
        # J-series head (beta > 1); v' is unbounded either way
        v0 = 0.0 if beta < 1.0 else coef * (0.5 * jz) ** nu * sp.rgamma(nu + 1.0)
        v = np.where(pos, v, v0)
        vp = np.where(pos, vp, np.inf * np.sign(coef))
    if v.ndim == 0:
        return float(v), float(vp)
    return v, vp


def _bessel_residual_ok(beta, nu, jz, coef, lam, tol=1e-6) -> bool:
    """Interior L2 residual of -(x^beta v')' - lam*v for the closed-form
    candidate, using exact Bessel derivatives."""
    p = 0.5 * (1.0 - beta)
    q = 0.5 * (2.0 - beta)
    x = np.linspace(0.05, 0.95, 181)
    w = jz * x ** q
    J = sp.jv(nu, w)
    Jp = sp.jvp(nu, w)
    Jpp = -Jp / w - (1.0 - nu * nu / (w * w)) * J
    v = coef * x ** p * J
    vp = coef * (p * x ** (p - 1.0) * J + jz * q * x ** (p + q - 1.0) * Jp)
    vpp = coef * (p * (p - 1.0) * x ** (p - 2.0) * J
                  + jz * q * (2.0 * p + q - 1.0) * x ** (p + q - 2.0) * Jp
                  + jz * jz * q * q * x ** (p + 2.0 * q - 2.0) * Jpp)
    resid = -beta * x ** (beta - 1.0) * vp - x ** beta * vpp - lam * v
    scale = lam * max(1.0, float(np.max(np.abs(v))))
    l2 = float(np.sqrt((x[1] - x[0]) * np.sum(resid ** 2)))
    return l2 / scale <= tol


def bessel_eigen(beta: float, K: int) -> EigenSystem:
    """Closed-form eigenpairs from the substitution
    v = x^{(1-beta)/2} J_nu(j_{nu,k} x^{(2-beta)/2}), nu = |1-beta|/(2-beta),
    with lambda_k = ((2-beta) j_{nu,k} / 2)^2.

    The candidate is verified against the differential equation before the
    system is returned; normalization is the closed-form Bessel-square
    integral and the sign makes v'(1) < 0.
    """
    _check_beta(beta)
    if K < 1:
        raise DomainError("need K >= 1")
    nu = abs(1.0 - beta) / (2.0 - beta)
    q = 0.5 * (2.0 - beta)
    zeros = np.array([bessel_j_zero(nu, k) for k in range(1, K + 1)])
    lambdas = (q * zeros) ** 2
    # |coef| normalizes ||v|| = 1; its sign makes v'(1) = -coef*q*j*J_{nu+1}(j)
    # negative
    coefs = np.sqrt(2.0 - beta) / sp.jv(nu + 1.0, zeros)
    for k in range(K):
        if not _bessel_residual_ok(beta, nu, zeros[k], coefs[k], lambdas[k]):
            raise ResolutionError(
                f"closed-form candidate failed the ODE residual check "
                f"(beta={beta}, k={k + 1})")
    return EigenSystem(beta, lambdas, "bessel_closed_form", (nu, zeros, coefs))


@dataclass
class FluxLimitReport:
    """Extrapolated limit of x^beta v'(x) as x -> 0."""

    limit: float
    vanishes: bool
    converged: bool
    xs: np.ndarray
    samples: np.ndarray
    tol: float


def flux_limit_check(v, beta: float, x_start: float = 0.25,
                     ratio: float = 0.5, steps: int = 40,
                     tol: float = 1e-6) -> FluxLimitReport:
    """Sample the weighted flux x^beta v'(x) on a geometric sequence x -> 0
    and extrapolate its limit (Aitken on the tail).

    v may be a pair-evaluator x -> (value, derivative) such as
    EigenSystem.mode(k), or a plain function of x (derivative then taken by
    a relative-step central difference).
    """
    _check_beta(beta)
    xs = x_start * ratio ** np.arange(steps)
    lo = getattr(v, "domain", None)
    if lo is not None and lo[0] > 0.0:
        xs = xs[xs >= lo[0] * (1.0 + 1e-9)]
    samples = np.empty(xs.size)
    for i, x in enumerate(xs):
        out = v(x)
        if isinstance(out, tuple):
            dv = out[1]
        else:
            d = 1e-5 * x
            dv = (v(x + d) - v(x - d)) / (2.0 * d)
        samples[i] = x ** beta * dv
    if samples.size < 3 or not np.all(np.isfinite(samples)):
        return FluxLimitReport(float("nan"), False, False, xs, samples, tol)

    def aitken(y0, y1, y2):
        den = y2 - 2.0 * y1 + y0
        if abs(den) < 1e-300:
            return y2
        return y2 - (y2 - y1) ** 2 / den

    est = aitken(*samples[-3:])
    prev = aitken(*samples[-4:-1]) if samples.size >= 4 else samples[-1]
    converged = abs(est - prev) <= max(tol, 1e-6 * (1.0 + abs(est)))
    return FluxLimitReport(float(est), bool(abs(est) <= tol), bool(converged),
                           xs, samples, tol)


@dataclass
class OrthogonalityReport:
    gram_l2: np.ndarray
    gram_weighted: np.ndarray
    max_offdiag_l2: float
    max_offdiag_weighted: float


def orthogonality_report(sys: EigenSystem, quad: int = 8) -> OrthogonalityReport:
    """Gram matrices int v_i v_j dx and int x^beta v_i' v_j' dx by composite
    Gauss quadrature on the system's graded mesh (weighted products of the
    P1 system use the exact cell integrals of x^beta)."""
    beta, K = sys.beta, sys.count
    if sys.method_tag == "galerkin_numeric":
        chart, cnodes, _, slopes = sys._payload
        if chart == "x":
            nodes = cnodes
        else:
            nodes = cnodes ** (1.0 / (1.0 - beta))
    else:
        chart, slopes = None, None
        nodes = _graded_mesh(beta, _DEFAULT_MESH_N)
    h = np.diff(nodes)
    xi, wt = np.polynomial.legendre.leggauss(quad)
    # all Gauss points of all cells, flattened
    X = (nodes[:-1, None] + 0.5 * h[:, None] * (1.0 + xi[None, :])).ravel()
    W = (0.5 * h[:, None] * wt[None, :]).ravel()
    V = np.empty((K, X.size))
    D = np.empty((K, X.size))
    for k in range(1, K + 1):
        V[k - 1], D[k - 1] = sys.eigen_eval(k, X)
    gram_l2 = (V * W) @ V.T
    if slopes is not None:
        if chart == "x":
            xpow = (nodes[1:] ** (beta + 1.0)
                    - nodes[:-1] ** (beta + 1.0)) / (beta + 1.0)
            gram_w = (slopes * xpow) @ slopes.T
        else:
            # int x^beta v_i' v_j' over a cell is (1-beta)*dy*(y-slopes product)
            dy = np.diff(cnodes)
            gram_w = (slopes * ((1.0 - beta) * dy)) @ slopes.T
    else:
        gram_w = (D * W * X ** beta) @ D.T
        if beta < 1.0:
            # first cell: v' ~ x^{-beta}, so fold x^{-beta} into a Jacobi rule
            # and integrate the smooth remainder x^{2 beta} v_i' v_j'
            xj, wj = sp.roots_jacobi(quad, 0.0, -beta)
            x1 = nodes[1]
            Xj = 0.5 * x1 * (1.0 + xj)
            scale = (0.5 * x1) ** (1.0 - beta)
            Vj = np.empty((K, quad))
            Dj = np.empty((K, quad))
            for k in range(1, K + 1):
                Vj[k - 1], Dj[k - 1] = sys.eigen_eval(k, Xj)
            first_plain = (D[:, :quad] * W[:quad] * X[:quad] ** beta) @ D[:, :quad].T
            first_jac = scale * (Dj * wj * Xj ** (2.0 * beta)) @ Dj.T
            gram_w += first_jac - first_plain
    offd = ~np.eye(K, dtype=bool)
    return OrthogonalityReport(
        gram_l2, gram_w,
        float(np.max(np.abs(gram_l2[offd]))) if K > 1 else 0.0,
        float(np.max(np.abs(gram_w[offd]))) if K > 1 else 0.0,
    )
