"""Fractional operators in time.

Erdelyi-Kober integral, the regularized hyper-Bessel derivative of order
alpha with arbitrary starting point a, and the L1 discretization of the
classical Caputo derivative that powers it after the change of variable
s = t^p - a^p (p = 1 - theta), which turns the hyper-Bessel operator into
p^alpha times a plain Caputo derivative in s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special as sp
from scipy.interpolate import PchipInterpolator

from .errors import DomainError

__all__ = [
    "TimeWarp",
    "EKParams",
    "SampledFunction",
    "warp_forward",
    "warp_inverse",
    "graded_grid",
    "ek_integral",
    "caputo_l1",
    "hb_caputo",
]


@dataclass(frozen=True)
class TimeWarp:
    """Time variable change s(t) = t^p - a^p with p = 1 - theta.

    Strictly increasing for t > a whenever theta < 1, with s(a) = 0.
    """

    theta: float
    a: float = 0.0

    def __post_init__(self):
        if not (self.theta < 1.0):
            raise DomainError(f"theta must be < 1, got {self.theta}")
        if self.a < 0.0 or not math.isfinite(self.a):
            raise DomainError(f"starting point must be >= 0, got {self.a}")

    @property
    def p(self) -> float:
        return 1.0 - self.theta


@dataclass(frozen=True)
class EKParams:
    """Parameters (gamma, delta, beta) of the Erdelyi-Kober integral
    I^{gamma,delta}_beta taken from starting point a."""

    gamma_ek: float
    delta: float
    beta_ek: float
    a: float = 0.0

    def __post_init__(self):
        if self.beta_ek <= 0.0:
            raise DomainError(f"beta_ek must be positive, got {self.beta_ek}")
        if self.a < 0.0:
            raise DomainError(f"starting point must be >= 0, got {self.a}")


class SampledFunction:
    """A scalar function of one variable: either a wrapped callable or a
    monotone-cubic interpolant through a table of nodes/values."""

    def __init__(self, fn: Callable, domain: Optional[tuple] = None):
        self._fn = fn
        self.domain = domain

    @classmethod
    def from_table(cls, nodes, values) -> "SampledFunction":
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != values.shape:
            raise DomainError("table needs matching 1-d nodes and values")
        if not np.all(np.diff(nodes) > 0.0):
            raise DomainError("table nodes must be strictly increasing")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
            raise DomainError("table entries must be finite")
        interp = PchipInterpolator(nodes, values, extrapolate=False)
        return cls(interp, domain=(float(nodes[0]), float(nodes[-1])))

    def __call__(self, t):
        if self.domain is not None:
            lo, hi = self.domain
            pad = 1e-12 * (1.0 + abs(hi))
            if np.any(np.asarray(t) < lo - pad) or np.any(np.asarray(t) > hi + pad):
                raise DomainError(f"evaluation outside domain [{lo}, {hi}]")
        out = self._fn(t)
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(out)
        return np.asarray(out, dtype=float)


def _as_fn(f) -> SampledFunction:
    return f if isinstance(f, SampledFunction) else SampledFunction(f)


def warp_forward(warp: TimeWarp, t: float) -> float:
    """s = t^p - a^p, defined for t >= a."""
    if t < warp.a:
        raise DomainError(f"t={t} below starting point a={warp.a}")
    return t ** warp.p - warp.a ** warp.p


def warp_inverse(warp: TimeWarp, s: float) -> float:
    if s < 0.0:
        raise DomainError(f"warped time must be >= 0, got {s}")
    return (s + warp.a ** warp.p) ** (1.0 / warp.p)


def graded_grid(length: float, n: int, exponent: float) -> np.ndarray:
    """Nodes length * (j/n)^exponent, j = 0..n, clustered at 0 for exponent > 1."""
    if length < 0.0 or n < 1:
        raise DomainError("need length >= 0 and n >= 1")
    return length * np.linspace(0.0, 1.0, n + 1) ** exponent


def ek_integral(f, params: EKParams, t: float, n: int = 96) -> float:
    """Erdelyi-Kober integral

        t^{-b(g+d)}/Gamma(d) * int_a^t (t^b - tau^b)^{d-1} tau^{b g} f(tau) d(tau^b)

    with (g, d, b) = (gamma_ek, delta, beta_ek).  The endpoint factor
    (t - tau)^{delta-1} (and, when a = 0, the algebraic factor at tau = 0)
    is absorbed into a Gauss-Jacobi rule, so smooth f is integrated to
    near machine accuracy.
    """
    g, d, b, a = params.gamma_ek, params.delta, params.beta_ek, params.a
    if d <= 0.0:
        raise DomainError(f"delta must be positive for the integral, got {d}")
    if t < a:
        raise DomainError(f"t={t} below starting point a={a}")
    if t == a:
        return 0.0

    fn = _as_fn(f)
    if a == 0.0 and g <= -1.0:
        raise DomainError("tau^{beta*gamma} weight not integrable at 0")
    if a == 0.0 and b <= 1.0:
        # integrate in y = tau^b; tau(y) = y^{1/b} is then C^1 at 0 and both
        # algebraic endpoint factors sit in the Jacobi weight
        x, w = sp.roots_jacobi(n, d - 1.0, g)
        Y = t ** b
        y = 0.5 * Y * (1.0 + x)
        vals = fn(y ** (1.0 / b))
        total = (0.5 * Y) ** (d + g) * np.dot(w, vals)
    else:
        # integrate in tau; (t^b - tau^b)/(t - tau) is smooth and positive
        # up to tau = t, and for a = 0 the remaining tau-power goes into
        # the weight exponent mu
        mu = b - 1.0 + b * g if a == 0.0 else 0.0
        x, w = sp.roots_jacobi(n, d - 1.0, mu)
        half = 0.5 * (t - a)
        tau = a + half * (1.0 + x)
        ratio = (t ** b - tau ** b) / (t - tau)
        vals = b * ratio ** (d - 1.0) * fn(tau)
        if a == 0.0:
            total = half ** (d + mu) * np.dot(w, vals)
        else:
            total = half ** d * np.dot(w, vals * tau ** (b - 1.0 + b * g))
    return float(t ** (-b * (g + d)) * total / sp.gamma(d))


def _l1_weight_diffs(e: float, d: np.ndarray, ds: np.ndarray) -> np.ndarray:
    """(d_j^e - d_{j+1}^e) for d_j = s_i - s_j, without the cancellation
    that zeroes out cells finer than ~eps*s_i on strongly graded grids."""
    with np.errstate(divide="ignore"):
        return d[:-1] ** e * (-np.expm1(e * np.log1p(-ds / d[:-1])))


def _l1_apply(alpha: float, s: np.ndarray, gv: np.ndarray) -> np.ndarray:
    """L1 product-integration values of the Caputo derivative of order
    alpha in (0, 1] at every node of s (first node -> 0).

    At alpha = 1 this degenerates to backward differences.
    """
    n = s.size
    out = np.zeros(n)
    ds = np.diff(s)
    dg = np.diff(gv) / ds
    if alpha == 1.0:
        out[1:] = dg
        return out
    e = 1.0 - alpha
    c = 1.0 / sp.gamma(2.0 - alpha)
    for i in range(1, n):
        wd = _l1_weight_diffs(e, s[i] - s[:i + 1], ds[:i])
        out[i] = c * np.dot(wd, dg[:i])
    return out


def caputo_l1(g, alpha: float, s_grid) -> np.ndarray:
    """Classical Caputo derivative of g on a grid starting at 0, by the L1
    scheme; returns one value per node (0 at the first node)."""
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size < 2 or s[0] != 0.0:
        raise DomainError("grid must be 1-d, start at 0, and have >= 2 nodes")
    if not np.all(np.diff(s) > 0.0):
        raise DomainError("grid nodes must be strictly increasing")
    gv = _as_fn(g)(s)
    if not np.all(np.isfinite(gv)):
        raise DomainError("g must be finite on the grid")
    return _l1_apply(alpha, s, gv)


def hb_caputo(f, alpha: float, warp: TimeWarp, t: float, n: int = 2048,
              warped: bool = False) -> float:
    """Regularized Caputo-like hyper-Bessel derivative of order alpha at t.

    Evaluated as p^alpha times the classical Caputo derivative of
    g(s) = f(t(s)) in warped time, on a grid graded toward s = 0.

    With warped=True, f is taken to be g directly (a function of s on
    [0, s(t)]).  For a > 0 this sidesteps the resolution floor of the
    t parameterization: t cannot represent warped times below about
    ulp(a^p), so steeply graded nodes would otherwise collapse.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if t <= warp.a:
        raise DomainError(f"need t > a, got t={t}, a={warp.a}")
    S = warp_forward(warp, t)
    s = graded_grid(S, n, 2.0 / alpha)
    fn = _as_fn(f)
    if warped:
        gv = fn(s)
    else:
        shift = warp.a ** warp.p
        if shift > 0.0:
            # a*exp(log1p(s/shift)/p) keeps t - a accurate for tiny s
            tt = warp.a * np.exp(np.log1p(s / shift) / warp.p)
            # drop nodes whose t collapsed onto the previous one; they carry
            # no information and put spurious spikes into the L1 slopes
            keep = np.concatenate(([True], np.diff(tt) > 0.0))
            s, tt = s[keep], tt[keep]
        else:
            tt = s ** (1.0 / warp.p)
        tt[0] = warp.a
        tt[-1] = t
        gv = fn(tt)
    if not np.all(np.isfinite(gv)):
        raise DomainError("f must be finite on [a, t]")
    # only the final L1 row is needed here
    ds = np.diff(s)
    dg = np.diff(gv) / ds
    if alpha == 1.0:
        return warp.p * dg[-1]
    wd = _l1_weight_diffs(1.0 - alpha, S - s, ds)
    dcap = np.dot(wd, dg) / sp.gamma(2.0 - alpha)
    return warp.p ** alpha * dcap
