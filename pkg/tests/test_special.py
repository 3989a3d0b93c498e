"""Mittag-Leffler / gamma / Bessel layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenfrac.errors import DomainError
from degenfrac.special import (
    bessel_j,
    bessel_j_zero,
    gamma_eval,
    ml_bound_fit,
    ml_eval,
    ml_eval_many,
)

# mpmath 150-digit series reference (independent oracle, frozen):
#   nsum(z**k / gamma(alpha*k + beta), k = 0..inf)
_ML_REFERENCE = [
    (0.5, 1.0, -2.0, 0.25539567631050574),
    (0.3, 0.7, -5.0, 0.084978838765212804),
    (0.7, 2.0, -25.0, 0.043489794580437572),
    (1.2, 1.0, -10.0, -0.026398347125869203),
    (0.5, 0.5, -0.75, 0.18398634582789768),
    (2.5, 1.0, -30.0, -2.2413251918675952),
    (0.6, 0.6, -12.5, 0.0018209982499286042),
    (0.9, 1.8, -40.0, 0.023392855743241674),
]


def test_ml_matches_high_precision_reference():
    for al, be, z, ref in _ML_REFERENCE:
        got = ml_eval(al, be, z)
        assert abs(got - ref) <= 5e-13 * (1.0 + abs(ref)), (al, be, z, got)


def test_ml_at_zero_is_reciprocal_gamma():
    for al in (0.3, 0.7, 1.0, 1.6, 2.0):
        for be in (0.5, 1.0, 2.0, 3.5):
            assert ml_eval(al, be, 0.0) == pytest.approx(1.0 / math.gamma(be),
                                                         rel=1e-15)


def test_ml_exponential_reduction():
    # E_{1,1}(z) = exp(z)
    for z in np.linspace(-10.0, 10.0, 41):
        assert ml_eval(1.0, 1.0, float(z)) == pytest.approx(math.exp(z),
                                                            rel=1e-13)


def test_ml_cosine_reduction():
    # E_{2,1}(-x^2) = cos(x)
    for x in np.linspace(0.0, 10.0, 41):
        assert abs(ml_eval(2.0, 1.0, -float(x) ** 2) - math.cos(x)) <= 1e-13


def test_ml_beta2_reduction():
    # E_{1,2}(z) = (e^z - 1)/z
    for z in (-8.0, -0.5, 0.3, 4.0):
        assert ml_eval(1.0, 2.0, z) == pytest.approx(math.expm1(z) / z,
                                                     rel=1e-12)


@given(al=st.sampled_from([0.3, 0.45, 0.6, 0.8, 0.95, 1.2, 1.7]),
       be=st.sampled_from([0.5, 1.0, 1.5, 2.0]),
       z=st.floats(min_value=-60.0, max_value=4.0))
@settings(max_examples=120, deadline=None)
def test_ml_recurrence_property(al, be, z):
    """E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)."""
    e1 = ml_eval(al, be, z)
    e2 = ml_eval(al, al + be, z)
    defect = abs(e1 - 1.0 / math.gamma(be) - z * e2)
    assert defect <= 1e-11 * (1.0 + abs(e1))


def test_ml_negative_ray_decay():
    # completely monotone for 0 < alpha < 1: positive and decreasing
    xs = np.linspace(0.0, 80.0, 200)
    vals = np.array([ml_eval(0.6, 1.0, -float(x)) for x in xs])
    assert np.all(vals > 0.0)
    assert np.all(np.diff(vals) < 0.0)


def test_ml_many_matches_scalar(rng):
    for al, be in ((0.3, 1.0), (0.55, 0.55), (0.8, 1.6), (1.0, 1.0),
                   (1.0, 2.0), (1.3, 1.0)):
        z = -np.sort(rng.uniform(0.0, 45.0, size=60))
        fast = ml_eval_many(al, be, z)
        slow = np.array([ml_eval(al, be, float(v)) for v in z])
        assert np.max(np.abs(fast - slow) / (1.0 + np.abs(slow))) <= 5e-12


def test_ml_many_positive_arguments_delegate():
    # the vectorized fast path covers the negative ray only; anything
    # positive must still come out right via the scalar route
    zs = np.array([-1.0, 0.5, 3.0])
    many = ml_eval_many(0.5, 1.0, zs)
    ref = np.array([ml_eval(0.5, 1.0, z) for z in zs])
    assert np.allclose(many, ref, rtol=1e-13)


def test_ml_rejects_bad_order():
    with pytest.raises(DomainError):
        ml_eval(0.0, 1.0, -1.0)
    with pytest.raises(DomainError):
        ml_eval(-0.5, 1.0, -1.0)
    with pytest.raises(DomainError):
        ml_eval(0.5, 1.0, math.nan)


def test_ml_bound_fit_validates_on_denser_grid():
    xs = np.linspace(0.0, 50.0, 101)
    dense = np.linspace(0.0, 50.0, 1001)
    for al in (0.3, 0.5, 0.8):
        fit = ml_bound_fit(al, 1.0, xs)
        assert math.isfinite(fit.M) and fit.M >= 1.0
        vals = ml_eval_many(al, 1.0, -dense)
        assert np.max((1.0 + dense) * np.abs(vals)) <= 1.05 * fit.M


def test_ml_bound_fit_rejects_alpha_2():
    with pytest.raises(DomainError):
        ml_bound_fit(2.0, 1.0, [0.0, 1.0])


def test_gamma_eval():
    assert gamma_eval(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_eval(6.0) == 120.0
    assert gamma_eval(-1.5) == pytest.approx(math.gamma(-1.5), rel=1e-14)
    for bad in (0.0, -3.0):
        with pytest.raises(DomainError):
            gamma_eval(bad)


def test_bessel_j_zero_is_a_zero():
    for nu in (0.0, 0.4, 1.0, 5.0 / 3.0, 7.2):
        for k in (1, 2, 5, 11):
            x = bessel_j_zero(nu, k)
            assert abs(bessel_j(nu, x)) <= 1e-11
            # derivative scale keeps the residual meaningful
            d = 1e-6 * x
            slope = (bessel_j(nu, x + d) - bessel_j(nu, x - d)) / (2.0 * d)
            assert abs(bessel_j(nu, x) / slope) <= 1e-10


def test_bessel_j_zeros_increase_and_interlace():
    nu = 0.4
    z_nu = [bessel_j_zero(nu, k) for k in range(1, 8)]
    z_up = [bessel_j_zero(nu + 1.0, k) for k in range(1, 8)]
    assert all(a < b for a, b in zip(z_nu, z_nu[1:]))
    # zeros of J_nu and J_{nu+1} interlace
    for k in range(6):
        assert z_nu[k] < z_up[k] < z_nu[k + 1]


def test_bessel_j_zero_matches_scipy_integer_order():
    from scipy import special as sp
    ref = sp.jn_zeros(0, 6)
    got = [bessel_j_zero(0.0, k) for k in range(1, 7)]
    assert np.max(np.abs(np.array(got) - ref)) <= 1e-10


def test_bessel_invalid_inputs():
    with pytest.raises(DomainError):
        bessel_j_zero(-1.5, 1)
    with pytest.raises(DomainError):
        bessel_j_zero(0.5, 0)
    with pytest.raises(DomainError):
        bessel_j(0.5, -1.0)
