import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from rou_limits.model import Boundary, ModelParams, ValidationError
from rou_limits.rng import rep_seed
from rou_limits.simulate import (THREADS_ENV, Scheme, SimConfig, simulate, simulate_batch,
                                 simulate_free, simulate_reflected, time_average_on_grid)
from rou_limits.variational import zeroth_order_path

from conftest import Q_REF


def test_realized_horizon():
    cfg = SimConfig(dt=0.3, horizon_T=1.0)
    assert cfg.n_steps == 3 and cfg.realized_T == pytest.approx(0.9)
    with pytest.raises(ValidationError):
        SimConfig(dt=0.0)
    with pytest.raises(ValidationError):
        SimConfig(dt=1.0, horizon_T=0.2)


def test_zero_noise_euler_tracks_ode():
    params = ModelParams(1.0, 2.0, 0.0, 1.0, x0=3.0)
    cfg = SimConfig(dt=1e-3, horizon_T=2.0, allow_zero_noise=True)
    path = simulate_free(params, cfg)
    exact = zeroth_order_path(params, path.times)
    bound = params.gamma * cfg.realized_T * cfg.dt * abs(params.x0 - params.mean_level)
    assert np.max(np.abs(path.values - exact)) < bound


def test_zero_noise_fixed_point():
    params = ModelParams(1.5, 3.0, 1.0, 0.0, x0=0.5)
    path = simulate_free(params, SimConfig(dt=0.01, horizon_T=1.0, allow_zero_noise=True))
    np.testing.assert_allclose(path.values, 0.5, rtol=0, atol=1e-15)


def test_zero_noise_requires_flag():
    with pytest.raises(ValidationError):
        simulate_free(ModelParams(1, 1, 0.0), SimConfig())


def test_boundary_kind_checked():
    with pytest.raises(ValidationError):
        simulate_free(ModelParams(1, 1, 1, boundary=Boundary.LOWER), SimConfig())
    with pytest.raises(ValidationError):
        simulate_reflected(ModelParams(1, 1, 1), SimConfig())


def test_ou_terminal_moments():
    params = ModelParams(1.0, 1.0, 1.0, 1.0, x0=0.0)
    batch = simulate_batch(params, SimConfig(dt=1e-3, horizon_T=1.0, seed=2024), 100_000)
    mean = 1 - math.exp(-1)
    var = 0.5 * (1 - math.exp(-2))
    se = math.sqrt(var / batch.reps)
    assert abs(batch.state.mean() - mean) < 3 * se
    assert batch.state.var(ddof=1) == pytest.approx(var, rel=0.05)


def test_ou_tail_indicator_vs_gaussian():
    params = ModelParams(1.0, 1.0, 1.0, 1.0, x0=1.0)
    reps = 100_000
    frac = simulate_batch(params, SimConfig(dt=1e-3, horizon_T=1.0, seed=77), reps,
                          lambda b: float(np.mean(b.state >= 2.0)))
    exact = stats.norm.sf(2.0, loc=1.0, scale=math.sqrt(0.5 * (1 - math.exp(-2))))
    assert abs(frac - exact) < 3 * math.sqrt(exact * (1 - exact) / reps)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_huge_d_matches_one_sided(scheme):
    cfg = SimConfig(dt=1e-3, horizon_T=5.0, seed=31, scheme=scheme)
    lower = simulate_reflected(ModelParams(0.5, 1.0, 1.0, 1.0, Boundary.LOWER, x0=0.1), cfg)
    double = simulate_reflected(ModelParams(0.5, 1.0, 1.0, 1.0, Boundary.DOUBLE, x0=0.1, d=1e6), cfg)
    assert not double.upper.values.any()
    np.testing.assert_array_equal(double.state.values, lower.state.values)
    np.testing.assert_array_equal(double.lower.values, lower.lower.values)
    assert lower.lower.values[-1] > 0


def test_zero_noise_positive_drift_no_push():
    params = ModelParams(1.0, 1.0, 0.0, 1.0, Boundary.LOWER, x0=0.0)
    cfg = SimConfig(dt=1e-3, horizon_T=2.0, allow_zero_noise=True)
    tri = simulate_reflected(params, cfg)
    assert not tri.lower.values.any()
    free = simulate_free(replace(params, boundary=Boundary.FREE), cfg)
    np.testing.assert_array_equal(tri.state.values, free.values)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_reflected_dominates_free(scheme):
    cfg = SimConfig(dt=1e-3, horizon_T=10.0, seed=5, scheme=scheme)
    free = simulate_free(ModelParams(0.2, 1.0, 1.0, 1.0, x0=0.0), cfg)
    refl = simulate_reflected(ModelParams(0.2, 1.0, 1.0, 1.0, Boundary.LOWER, x0=0.0), cfg)
    assert np.all(refl.state.values >= free.values)


def test_projection_triple_invariants(drou_ref):
    tri = simulate_reflected(drou_ref, SimConfig(dt=1e-3, horizon_T=50.0, seed=9))
    assert tri.violations(d=2.0) == []
    assert tri.lower.values[-1] > 0 and tri.upper.values[-1] > 0


def test_projection_increments_are_clamped_amounts(drou_ref):
    # same seed, free path increments: regulator steps equal the projected overshoot
    cfg = SimConfig(dt=1e-2, horizon_T=20.0, seed=12)
    tri = simulate_reflected(drou_ref, cfg)
    z = tri.state.values
    free_inc = simulate_free(replace(drou_ref, boundary=Boundary.FREE, d=None), cfg).values
    xi = (np.diff(free_inc) - (1.0 - free_inc[:-1]) * cfg.dt)
    proposal = z[:-1] + (1.0 - z[:-1]) * cfg.dt + xi
    np.testing.assert_allclose(np.diff(tri.lower.values), np.maximum(-proposal, 0), atol=1e-12)
    np.testing.assert_allclose(np.diff(tri.upper.values), np.maximum(proposal - 2.0, 0), atol=1e-12)


def test_bridge_triple_invariants(drou_ref):
    cfg = SimConfig(dt=1e-3, horizon_T=50.0, seed=9, scheme=Scheme.BRIDGE)
    tri = simulate_reflected(drou_ref, cfg)
    assert tri.violations(d=2.0, complementarity=False) == []
    z = tri.state.values
    # bridge pushes only happen on steps that start in the boundary's half
    grow_lo = np.diff(tri.lower.values) > 0
    grow_up = np.diff(tri.upper.values) > 0
    assert np.all(z[:-1][grow_lo] < 1.0) and np.all(z[:-1][grow_up] >= 1.0)


def test_batch_rep_zero_matches_single_run(drou_ref):
    cfg = SimConfig(dt=1e-3, horizon_T=2.0, seed=5)
    batch = simulate_batch(drou_ref, cfg, 3)
    single = simulate(drou_ref, replace(cfg, seed=rep_seed(5, 0)))
    assert batch.state[0] == single.state.values[-1]
    assert batch.upper[0] == single.upper.values[-1]
    paths = simulate_batch(drou_ref, cfg, 3, full_paths=True)
    assert paths[2].state.values[-1] == batch.state[2]


def test_batch_deterministic(drou_ref):
    cfg = SimConfig(dt=1e-2, horizon_T=10.0, seed=8, scheme=Scheme.BRIDGE)
    a = simulate_batch(drou_ref, cfg, 64)
    b = simulate_batch(drou_ref, cfg, 64)
    for name in ("state", "lower", "upper"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_thread_cap_validation(monkeypatch, drou_ref):
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ValidationError):
        simulate_batch(drou_ref, SimConfig(dt=0.1, horizon_T=1.0), 2)
    monkeypatch.setenv(THREADS_ENV, "1")
    assert simulate_batch(drou_ref, SimConfig(dt=0.1, horizon_T=1.0), 2).reps == 2


def test_weak_convergence_smoke():
    params = ModelParams(1.0, 1.0, 1.0, 1.0, x0=0.0)
    reps = 100_000
    means, ses = [], []
    for dt in (2e-3, 1e-3):
        x = simulate_batch(params, SimConfig(dt=dt, horizon_T=1.0, seed=404), reps).state
        means.append(x.mean())
        ses.append(x.std(ddof=1) / math.sqrt(reps))
    # streams at different dt are independent, so the difference carries both errors
    assert abs(means[0] - means[1]) < 3 * math.hypot(*ses)


def test_time_average_matches_path(drou_ref):
    cfg = SimConfig(dt=1e-2, horizon_T=5.0, seed=3)
    grid = np.linspace(0.0, 2.0, 201)
    avg, (z, lo, up) = time_average_on_grid(drou_ref, cfg, grid, grid ** 2)
    tri = simulate(drou_ref, cfg)
    assert z == tri.state.values[-1] and up == tri.upper.values[-1]
    # linear interpolation of x^2 on a 0.01 grid overshoots by at most dx^2/4
    assert avg == pytest.approx(np.mean(tri.state.values[:-1] ** 2), abs=2.5e-5 + 1e-12)


@pytest.mark.slow
def test_bridge_loss_and_idle_rates(drou_ref):
    cfg = SimConfig(dt=1e-3, horizon_T=1e4, seed=2718, scheme=Scheme.BRIDGE)
    batch = simulate_batch(drou_ref, cfg, 16)
    assert batch.upper.mean() / batch.T == pytest.approx(Q_REF, rel=0.02)
    assert batch.lower.mean() / batch.T == pytest.approx(Q_REF, rel=0.02)
