"""Estimators, Gumbel fluctuation test, and KS machinery."""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from lrfpp import (
    ConfigError,
    ExperimentSpec,
    TorusConfig,
    estimate_scaled,
    gumbel_cdf,
    gumbel_test,
    ks_one_sample,
    ks_two_sample,
    total_rate,
)
from lrfpp import stats


# ---------------------------------------------------------------------------
# KS machinery
# ---------------------------------------------------------------------------


def test_kolmogorov_pvalue_matches_scipy():
    for lam in (0.3, 0.5, 0.8, 1.0, 1.36, 2.0, 3.0):
        assert stats.kolmogorov_pvalue(lam) == pytest.approx(
            float(scipy.special.kolmogorov(lam)), abs=1e-7
        )
    assert stats.kolmogorov_pvalue(0.0) == 1.0


def test_ks_two_sample_identical_vectors():
    x = np.linspace(0.0, 1.0, 100)
    d, p = ks_two_sample(x, x.copy())
    assert d <= 1.0 / len(x)
    assert p == pytest.approx(1.0, abs=1e-6)


def test_ks_two_sample_separation():
    gen = np.random.default_rng(0)
    a = gen.random(1000)
    b = gen.random(1000) + 0.5
    d, p = ks_two_sample(a, b)
    assert d > 0.4
    assert p < 1e-6


def test_ks_two_sample_agrees_with_scipy():
    gen = np.random.default_rng(1)
    a = gen.exponential(size=500)
    b = gen.exponential(size=700) * 1.1
    d, _ = ks_two_sample(a, b)
    ref = scipy.stats.ks_2samp(a, b, method="asymp")
    assert d == pytest.approx(ref.statistic, abs=1e-12)


def test_ks_one_sample_exact_grid():
    n = 200
    x = (np.arange(1, n + 1) - 0.5) / n  # exact uniform CDF grid midpoints
    d, p = ks_one_sample(x, lambda t: np.asarray(t))
    assert d <= 1.0 / n
    assert p > 0.999999


def test_ks_one_sample_detects_shift():
    gen = np.random.default_rng(2)
    x = gen.normal(loc=0.3, size=2000)
    d, p = ks_one_sample(x, scipy.stats.norm.cdf)
    assert p < 1e-6


def test_ks_minimum_sample_size():
    with pytest.raises(ConfigError):
        ks_one_sample(np.arange(10), lambda t: np.asarray(t))
    with pytest.raises(ConfigError):
        ks_two_sample(np.arange(10), np.arange(100))


def test_gumbel_cdf_shape():
    assert gumbel_cdf(np.array([0.0]))[0] == pytest.approx(math.exp(-1.0))
    x = np.linspace(-3, 8, 50)
    f = gumbel_cdf(x)
    assert ((f >= 0) & (f <= 1)).all()
    assert (np.diff(f) > 0).all()


# ---------------------------------------------------------------------------
# Experiment specs and estimators
# ---------------------------------------------------------------------------


def test_spec_validation():
    cfg = TorusConfig(2, 4, 2.0, 0.5)
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="bogus", replicates=5, root_seed=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="typical", replicates=0, root_seed=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="tau", replicates=5, root_seed=0)  # no k/beta
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="tau", replicates=5, root_seed=0, k=2, beta=0.5)
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="tau", replicates=5, root_seed=0, k=1)
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="tau", replicates=5, root_seed=0, beta=1.2)
    with pytest.raises(ConfigError):
        ExperimentSpec(cfg=cfg, quantity="typical", replicates=5, root_seed=0, k=3)
    spec = ExperimentSpec(cfg=cfg, quantity="tau", replicates=5, root_seed=0, beta=0.5)
    assert spec.tau_k() == 4  # floor(16**0.5)


def test_seed_determinism_bit_identical():
    cfg = TorusConfig(2, 4, 2.0, 0.5)
    spec = ExperimentSpec(cfg=cfg, quantity="typical", replicates=40, root_seed=123, source="uniform")
    a = estimate_scaled(spec)
    b = estimate_scaled(spec)
    assert np.array_equal(a.samples, b.samples)
    assert a.scaled_mean == b.scaled_mean


def test_jobs_do_not_change_samples():
    cfg = TorusConfig(2, 3, 2.0, 0.5)
    spec = ExperimentSpec(cfg=cfg, quantity="typical", replicates=24, root_seed=5, source="uniform")
    seq = estimate_scaled(spec, jobs=1)
    par = estimate_scaled(spec, jobs=2)
    assert np.array_equal(seq.samples, par.samples)


def test_summary_fields():
    cfg = TorusConfig(2, 4, 2.0, 0.0)
    spec = ExperimentSpec(cfg=cfg, quantity="typical", replicates=60, root_seed=9, source="uniform")
    s = estimate_scaled(spec)
    assert s.quantity == "typical"
    assert len(s.samples) == 60
    assert s.se == pytest.approx(float(np.std(s.samples, ddof=1)) / math.sqrt(60))
    assert list(s.quantiles) == sorted(s.quantiles)
    assert s.scale == pytest.approx(total_rate(cfg) / math.log(cfg.n))
    assert s.scaled_mean == pytest.approx(s.mean * s.scale)


def test_two_site_typical_is_single_edge_exponential():
    cfg = TorusConfig(1, 2, 2.0, 0.5)
    spec = ExperimentSpec(cfg=cfg, quantity="typical", replicates=2000, root_seed=3, source="uniform")
    s = estimate_scaled(spec)
    _, p = ks_one_sample(s.samples, lambda t: 1.0 - np.exp(-np.asarray(t)))
    assert p > 1e-4
    assert s.scale == pytest.approx(1.0 / math.log(2.0))


def test_typical_source_choice_unbiased():
    # Fixed-source and uniform-source estimators agree (translation
    # invariance), 3 combined standard errors.
    cfg = TorusConfig(2, 4, 2.0, 1.0)
    fixed = estimate_scaled(
        ExperimentSpec(cfg=cfg, quantity="typical", replicates=1500, root_seed=31, source="origin")
    )
    unif = estimate_scaled(
        ExperimentSpec(cfg=cfg, quantity="typical", replicates=1500, root_seed=32, source="uniform")
    )
    se = math.sqrt(fixed.se**2 + unif.se**2)
    assert abs(fixed.mean - unif.mean) <= 3 * se


def test_estimate_scaled_rejects_tau():
    cfg = TorusConfig(2, 4, 2.0, 0.5)
    spec = ExperimentSpec(cfg=cfg, quantity="tau", replicates=50, root_seed=0, k=4)
    with pytest.raises(ConfigError):
        estimate_scaled(spec)
    with pytest.raises(ConfigError):
        gumbel_test(ExperimentSpec(cfg=cfg, quantity="typical", replicates=50, root_seed=0))


def test_gumbel_test_small_scale():
    # Complete-graph case at modest size: centered discovery-time fluctuations
    # already sit close to the standard Gumbel law.
    cfg = TorusConfig(2, 16, 2.0, 0.0)
    spec = ExperimentSpec(cfg=cfg, quantity="tau", replicates=600, root_seed=17, k=16)
    s = gumbel_test(spec)
    assert s.ks_pvalue is not None and s.ks_pvalue > 0.001
    assert abs(s.mean - np.euler_gamma) <= 4 * s.se
    assert s.details["k"] == 16
    assert s.scaled_mean == pytest.approx(
        (s.mean + math.log(16)) / math.log(cfg.n)
    )


def test_ordering_sample_is_nested():
    cfg = TorusConfig(2, 4, 2.0, 0.5)
    for r in range(25):
        typ, fl, dm = stats.oracle_ordering_sample(cfg, (40, r))
        assert typ <= fl <= dm


def test_diameter_estimator_runs():
    cfg = TorusConfig(2, 3, 2.0, 0.5)
    spec = ExperimentSpec(cfg=cfg, quantity="diameter", replicates=30, root_seed=8)
    s = estimate_scaled(spec)
    assert (s.samples > 0).all()
