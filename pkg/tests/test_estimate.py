import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from rou_limits.estimate import (Which, clopper_pearson, clt_check, clt_check_both,
                                 clt_from_batch, qv_ergodic_check, tail_probability)
from rou_limits.model import Boundary, ModelParams, ValidationError
from rou_limits.simulate import Scheme, SimConfig
from rou_limits.stationary import loss_statistics

SMALL = SimConfig(dt=1e-2, horizon_T=200.0, seed=3, scheme=Scheme.BRIDGE)


def test_clt_report_shape_and_reproducible(drou_ref):
    a = clt_check(drou_ref, SMALL, 100, "upper")
    b = clt_check(drou_ref, SMALL, 100, Which.UPPER)
    assert a.reps == 100 and a.normalized_samples.size == 100
    assert a.normalized_samples.tobytes() == b.normalized_samples.tobytes()
    assert a.ks_distance == b.ks_distance
    assert a.target_var == loss_statistics(drou_ref).eta2_upper
    z = a.normalized_samples
    assert a.sample_var == pytest.approx(np.var(z, ddof=1), rel=1e-14)
    ref = stats.kstest(z, stats.norm(scale=math.sqrt(a.target_var)).cdf).statistic
    assert a.ks_distance == pytest.approx(ref, rel=1e-14)


def test_clt_both_share_batch(drou_ref):
    both = clt_check_both(drou_ref, SMALL, 100)
    lower = clt_check(drou_ref, SMALL, 100, "lower")
    assert both[Which.LOWER].normalized_samples.tobytes() == lower.normalized_samples.tobytes()


def test_clt_preconditions(drou_ref):
    with pytest.raises(ValidationError):
        clt_check(drou_ref, SMALL, 99, "upper")
    with pytest.raises(ValidationError):
        clt_check(replace(drou_ref, boundary=Boundary.LOWER, d=None), SMALL, 100, "upper")


@pytest.mark.slow
def test_clt_reference_mean_variance_ks(clt_batch):
    params, cfg, batch = clt_batch
    loss = loss_statistics(params)
    for which, target in ((Which.UPPER, loss.eta2_upper), (Which.LOWER, loss.eta2_lower)):
        rep = clt_from_batch(batch, loss, which)
        assert abs(rep.sample_mean) < 3 * math.sqrt(target / rep.reps)
        assert rep.sample_var == pytest.approx(target, rel=0.10)
        assert rep.ks_distance < 0.08


@pytest.mark.slow
def test_qv_ergodic_average(drou_ref):
    lhs, rhs = qv_ergodic_check(drou_ref, SimConfig(1e-3, 1e4, 41, Scheme.BRIDGE))
    assert abs(lhs - rhs) / rhs < 0.05


@pytest.mark.slow
def test_qv_sigma_scaling(drou_ref):
    # sigma -> 2 sigma with alpha, d, x0 doubled maps Z to 2 Z exactly
    scaled = ModelParams(2.0, 1.0, 2.0, 1.0, Boundary.DOUBLE, x0=2.0, d=4.0)
    cfg = SimConfig(1e-3, 1e4, 43, Scheme.BRIDGE)
    lhs1, rhs1 = qv_ergodic_check(drou_ref, cfg)
    lhs4, rhs4 = qv_ergodic_check(scaled, cfg)
    assert rhs4 / rhs1 == pytest.approx(4.0, rel=1e-9)
    assert (lhs4 / rhs4) / (lhs1 / rhs1) == pytest.approx(1.0, abs=1e-12)
    assert lhs4 / rhs4 == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("k,n", [(0, 10), (1, 10), (5, 10), (10, 10), (37, 1000), (999, 1000)])
def test_clopper_pearson_inverts_binomial(k, n):
    lo, hi = clopper_pearson(k, n)
    if k == 0:
        assert lo == 0.0 and stats.binom.cdf(0, n, hi) == pytest.approx(0.05, rel=1e-10)
    elif k == n:
        assert hi == 1.0 and stats.binom.sf(n - 1, n, lo) == pytest.approx(0.05, rel=1e-10)
    else:
        assert stats.binom.sf(k - 1, n, lo) == pytest.approx(0.025, rel=1e-8)
        assert stats.binom.cdf(k, n, hi) == pytest.approx(0.025, rel=1e-8)


def test_tail_reflected_state_nonnegative():
    p = ModelParams(0.5, 1.0, 1.0, boundary=Boundary.LOWER, x0=0.0)
    p_hat, lo, hi = tail_probability(p, SimConfig(dt=1e-2), 2.0, 0.0, 500)
    assert p_hat == 1.0 and hi == 1.0 and lo > 0.99


def test_tail_above_d_is_zero(drou_ref):
    est = tail_probability(drou_ref, SimConfig(dt=1e-2), 2.0, 2.5, 500)
    assert est.p_hat == 0.0 and est.ci_low == 0.0
    assert est.ci_high == pytest.approx(1 - 0.05 ** (1 / 500))


def _exact_ou_tail(p, T, b):
    mean = p.alpha / p.gamma + (p.x0 - p.alpha / p.gamma) * math.exp(-p.gamma * T)
    var = p.epsilon * p.sigma ** 2 / (2 * p.gamma) * (1 - math.exp(-2 * p.gamma * T))
    return stats.norm.sf(b, loc=mean, scale=math.sqrt(var))


def test_tail_ou_vs_gaussian(ou_ref):
    reps = 50_000
    est = tail_probability(ou_ref, SimConfig(dt=1e-3, seed=17), 1.0, 2.0, reps)
    exact = _exact_ou_tail(ou_ref, 1.0, 2.0)
    assert abs(est.p_hat - exact) < 3 * math.sqrt(exact * (1 - exact) / reps)


def test_tail_interval_coverage(ou_ref):
    exact = _exact_ou_tail(ou_ref, 1.0, 2.0)
    covered = 0
    for seed in range(100):
        est = tail_probability(ou_ref, SimConfig(dt=5e-3, seed=1000 + seed), 1.0, 2.0, 2000)
        covered += est.ci_low <= exact <= est.ci_high
    assert covered >= 90
