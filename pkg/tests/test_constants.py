"""Limit-constant routes cross-validated against analytic oracles.

Frozen oracle values, each derived independently of the code under test:

* exponent 1, 1-norm, d = 2: the cube integral of 1/(y1 + y2) is 2 ln 2 by
  direct integration, so the constant is 4 ln 2;
* exponent 1, 2-norm, d = 2: the cube integral of 1/|y| is 2 asinh(1), so the
  constant is 4 asinh(1);
* d = 1: the constant is 2**a / (1 - a) from the elementary integral;
* 2F1(1, 1; 2; z) = -log(1 - z)/z gives the series an independent check.
"""

import math

import numpy as np
import pytest
import scipy.special

from lrfpp import ConfigError, ConstantQuery
from lrfpp.constants import (
    evaluate,
    hyp2f1_series,
    limit_constant_gamma_mc,
    limit_constant_max_norm,
    limit_constant_planar,
    limit_constant_quadrature,
    unit_cube_integral,
)

FOUR_LN_2 = 4.0 * math.log(2.0)          # 2.772588722239781
FOUR_ASINH_1 = 4.0 * math.asinh(1.0)     # 3.525494348078172
TWO_SQRT_2 = 2.0 * math.sqrt(2.0)        # 2.828427124746190


def _quad(d, p, alpha, tol=1e-9):
    return limit_constant_quadrature(ConstantQuery(d, p, alpha, "quadrature", tol))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def test_quadrature_alpha_zero_exact():
    for d, p in [(1, 2.0), (2, 1.0), (3, math.inf)]:
        res = _quad(d, p, 0.0)
        assert res.value == 1.0 and res.error == 0.0


def test_quadrature_d2_p1_analytic():
    res = _quad(2, 1.0, 1.0)
    assert res.converged
    assert res.value == pytest.approx(FOUR_LN_2, abs=1e-9)


def test_quadrature_d2_p2_analytic():
    res = _quad(2, 2.0, 1.0)
    assert res.value == pytest.approx(FOUR_ASINH_1, abs=1e-9)


def test_quadrature_d1_analytic():
    res = _quad(1, 2.0, 0.5)
    assert res.value == pytest.approx(TWO_SQRT_2, abs=1e-10)
    for alpha in (0.25, 0.75):
        res = _quad(1, 7.0, alpha)
        assert res.value == pytest.approx(2.0**alpha / (1.0 - alpha), abs=1e-10)


def test_quadrature_matches_max_norm_closed_form():
    for d, alpha in [(2, 0.5), (2, 1.5), (3, 1.0), (4, 2.5)]:
        res = _quad(d, math.inf, alpha)
        assert res.value == pytest.approx(limit_constant_max_norm(d, alpha), abs=1e-9)


def test_quadrature_d3_p2_against_split_oracle():
    # Independent oracle for d = 3, 2-norm: inside the unit ball the radial
    # law is exact (volume of {|y| <= r} in the octant is pi r^3 / 6, so the
    # singular part integrates to (pi/2)/(3 - alpha)); outside the ball the
    # integrand is bounded in [3**(-alpha/2), 1] and plain Monte Carlo on the
    # cube estimates it tightly.
    alpha = 1.5
    inner = (math.pi / 2.0) / (3.0 - alpha)
    rng = np.random.default_rng(0)
    pts = rng.random((2_000_000, 3))
    norms = np.sqrt((pts**2).sum(axis=1))
    outer_samples = np.where(norms > 1.0, norms**-alpha, 0.0)
    outer = float(outer_samples.mean())
    outer_se = float(outer_samples.std(ddof=1)) / math.sqrt(len(outer_samples))
    res = _quad(3, 2.0, alpha)
    assert res.value / 2.0**alpha == pytest.approx(inner + outer, abs=5 * outer_se)


def test_quadrature_reports_convergence_failure():
    # An impossible tolerance forces refinement past the evaluation budget;
    # the achieved error must be reported honestly instead of faked.
    res = unit_cube_integral(2, 2.0, 1.0, 1e-30, max_evals=20_000)
    assert not res.converged
    assert res.error > 1e-30
    assert res.value == pytest.approx(2.0 * math.asinh(1.0), abs=1e-9)


def test_quadrature_validation():
    with pytest.raises(ConfigError):
        _quad(5, 2.0, 1.0)
    with pytest.raises(ConfigError):
        ConstantQuery(2, 2.0, 2.0, "quadrature")


# ---------------------------------------------------------------------------
# Closed form for the max-coordinate norm
# ---------------------------------------------------------------------------


def test_max_norm_closed_form_values():
    assert limit_constant_max_norm(2, 1.0) == 4.0
    assert limit_constant_max_norm(3, 1.5) == pytest.approx(4.0 * math.sqrt(2.0), rel=1e-15)
    for d in (1, 2, 5):
        assert limit_constant_max_norm(d, 0.0) == 1.0
    with pytest.raises(ConfigError):
        limit_constant_max_norm(2, 2.0)


# ---------------------------------------------------------------------------
# Hypergeometric series (d = 2)
# ---------------------------------------------------------------------------


def test_hyp2f1_log_identity():
    for z in (0.1, 0.3, 0.5, 0.9):
        assert hyp2f1_series(1.0, 1.0, 2.0, z) == pytest.approx(
            -math.log(1.0 - z) / z, rel=1e-14
        )


def test_hyp2f1_against_scipy():
    for (a, b, c) in [(1.0, 0.25, 1.5), (1.0, 0.8, 2.3), (0.5, 0.5, 1.5)]:
        assert hyp2f1_series(a, b, c, 0.5) == pytest.approx(
            float(scipy.special.hyp2f1(a, b, c, 0.5)), rel=1e-12
        )


def test_planar_constant_p1_is_four_ln_two():
    assert limit_constant_planar(1.0, 1.0) == pytest.approx(FOUR_LN_2, rel=1e-14)


def test_planar_constant_alpha_zero_limit():
    assert limit_constant_planar(3.0, 0.0) == 1.0
    assert limit_constant_planar(2.0, 1e-12) == pytest.approx(1.0, abs=1e-11)


def test_planar_constant_matches_quadrature():
    assert limit_constant_planar(2.0, 1.0) == pytest.approx(
        _quad(2, 2.0, 1.0).value, abs=1e-6
    )


def test_planar_constant_validation():
    with pytest.raises(ConfigError):
        limit_constant_planar(math.inf, 1.0)
    with pytest.raises(ConfigError):
        limit_constant_planar(2.0, 2.0)


def test_planar_constant_large_p_approaches_max_norm():
    for alpha in (0.5, 1.0, 1.5):
        gap = abs(limit_constant_planar(1e4, alpha) - limit_constant_max_norm(2, alpha))
        assert gap <= 1e-3


def test_constant_monotone_in_p():
    # Pointwise the p-norm shrinks as p grows (||y||_1 >= ||y||_2 >= ||y||_inf),
    # so the negative-power integrand and hence the constant grow with p.
    for d, alpha in [(1, 0.5), (2, 0.5), (2, 1.0)]:
        vals = [_quad(d, p, alpha).value for p in (1.0, 2.0)]
        vals.append(limit_constant_max_norm(d, alpha))
        assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# Gamma-max Monte Carlo
# ---------------------------------------------------------------------------


def test_mc_d1_matches_elementary_constant():
    # d = 1 collapses to 2**a/(1 - a); boundary-variance cell, well-behaved.
    mc = limit_constant_gamma_mc(1, 2.0, 0.5, 200_000, seed=0)
    target = 2.0**0.5 / 0.5
    assert abs(mc.value - target) <= 4.0 * mc.std_error


def test_mc_d2_p1_matches_four_ln_two():
    mc = limit_constant_gamma_mc(2, 1.0, 1.0, 1_000_000, seed=0)
    assert abs(mc.value - FOUR_LN_2) <= 3.0 * mc.std_error


def test_mc_d2_p2_matches_quadrature():
    mc = limit_constant_gamma_mc(2, 2.0, 0.5, 1_000_000, seed=0)
    assert abs(mc.value - _quad(2, 2.0, 0.5).value) <= 3.0 * mc.std_error


def test_mc_reports_effective_sample_size():
    mc = limit_constant_gamma_mc(2, 2.0, 0.5, 50_000, seed=1)
    assert 0 < mc.effective_samples < 50_000  # heavy-tailed weights shrink it


def test_mc_default_seed_is_zero():
    a = limit_constant_gamma_mc(2, 1.0, 1.0, 50_000)
    b = limit_constant_gamma_mc(2, 1.0, 1.0, 50_000, seed=0)
    assert a.value == b.value


def test_mc_validation():
    with pytest.raises(ConfigError):
        limit_constant_gamma_mc(2, math.inf, 1.0, 50_000)
    with pytest.raises(ConfigError):
        limit_constant_gamma_mc(2, 2.0, 0.0, 50_000)
    with pytest.raises(ConfigError):
        limit_constant_gamma_mc(2, 2.0, 1.0, 5_000)


def test_evaluate_dispatch():
    assert evaluate(ConstantQuery(2, math.inf, 1.0, "closed-p-infinity")) == 4.0
    assert evaluate(ConstantQuery(2, 1.0, 1.0, "hypergeometric-d2")) == pytest.approx(
        FOUR_LN_2, rel=1e-14
    )
    res = evaluate(ConstantQuery(2, 2.0, 0.5, "quadrature"))
    assert res.converged
    with pytest.raises(ConfigError):
        ConstantQuery(2, 2.0, 1.0, "closed-p-infinity")
    with pytest.raises(ConfigError):
        ConstantQuery(1, 2.0, 0.5, "hypergeometric-d2")
