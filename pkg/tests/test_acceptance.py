"""Acceptance criteria, one test each, at their stated tolerances.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdict lines as
they are produced; they are also repeated in the terminal summary.
"""

import math

import numpy as np
import pytest
from scipy import stats

from rou_limits.cumulant import cumulant_curve, loss_ld_rate, psi_of_theta
from rou_limits.estimate import Which, clt_from_batch, qv_ergodic_check
from rou_limits.model import Boundary, ModelParams
from rou_limits.simulate import Scheme, SimConfig, simulate_batch
from rou_limits.stationary import loss_statistics
from rou_limits.variational import Regime, decay_rate, most_likely_path, rate_functional

from acceptance_log import record
from conftest import Q_REF
from skorokhod_props import run_suite
from test_variational import _random_case

LIMIT = -1.0 / (1.0 - math.exp(-2.0))


def test_01_decay_rate_vs_gaussian_oracle():
    # X_T ~ N(1, eps (1 - e^-2)/2) for the reference case
    eps = np.array([0.2, 0.1, 0.05, 0.02, 0.01])
    sd = np.sqrt(eps * (1 - math.exp(-2.0)) / 2)
    vals = eps * stats.norm.logsf(2.0, loc=1.0, scale=sd)
    rate = decay_rate(ModelParams(1.0, 1.0, 1.0, x0=1.0), 1.0, 2.0, Regime.OU).rate
    gaps = np.abs(vals - LIMIT)
    monotone = bool(np.all(np.diff(gaps) < 0))
    rel = gaps[-1] / abs(LIMIT)
    ok = monotone and rel < 0.08 and rate == pytest.approx(LIMIT, rel=1e-14)
    assert record(1, "decay rate vs Gaussian tail", ok,
                  f"eps log p = {np.round(vals, 5).tolist()}, limit {LIMIT:.6f}, "
                  f"monotone={monotone}, rel gap at 0.01 = {rel:.4f} (< 0.08)")


def test_02_regime_invariance():
    rng = np.random.default_rng(2)
    distinct = 0
    for _ in range(200):
        p, T, b = _random_case(rng)
        distinct += len({decay_rate(p, T, b, r).rate for r in Regime}) != 1
    assert record(2, "regime invariance", distinct == 0,
                  f"{distinct} of 200 parameter sets differ across OU/ROU/DROU")


def test_03_optimizer_certifies_infimum():
    worst = 0.0
    for k in range(21):
        if k == 0:
            p, T, b = ModelParams(1.0, 1.0, 1.0, x0=1.0), 1.0, 2.0
        else:
            p, T, b = _random_case(np.random.default_rng(1000 + k))
        rate = decay_rate(p, T, b, Regime.OU).rate
        value = rate_functional(most_likely_path(p, T, b).sample(1e-4), p, "I")
        worst = max(worst, abs(value - abs(rate)) / abs(rate))
    assert record(3, "rate functional at most likely path", worst < 1e-5,
                  f"max relative gap {worst:.3g} over 21 cases (< 1e-5)")


@pytest.mark.slow
def test_04_rou_matches_ou_empirically():
    eps, reps, T, b = 0.5, 200_000, 1.0, 2.0
    cfg = SimConfig(dt=1e-3, horizon_T=T, seed=4242)
    out = {}
    for boundary in (Boundary.FREE, Boundary.LOWER):
        p = ModelParams(1.0, 1.0, 1.0, eps, boundary, x0=1.0)
        hits = int(np.count_nonzero(simulate_batch(p, cfg, reps).state >= b))
        p_hat = hits / reps
        out[boundary] = (eps * math.log(p_hat), eps * math.sqrt((1 - p_hat) / hits))
    (v_ou, se_ou), (v_rou, se_rou) = out[Boundary.FREE], out[Boundary.LOWER]
    pooled = math.hypot(se_ou, se_rou)
    diff = abs(v_rou - v_ou)
    assert record(4, "ROU vs OU at eps=0.5", diff < 2 * pooled,
                  f"OU {v_ou:.5f}, ROU {v_rou:.5f}, |diff| {diff:.2e} < 2 x pooled SE {pooled:.2e}")


@pytest.mark.slow
def test_05_loss_rate(clt_batch):
    params, _, batch = clt_batch
    q = loss_statistics(params).q_upper
    sim = float(np.mean(batch.upper)) / batch.T
    quad_err, mc_rel = abs(q - Q_REF), abs(sim - q) / q
    assert record(5, "loss rate q_U", quad_err < 1e-8 and mc_rel < 0.02,
                  f"quadrature {q:.12f} vs closed form {Q_REF:.12f} (|diff| {quad_err:.1e} < 1e-8); "
                  f"mean U_T/T {sim:.6f} over {batch.reps} paths, rel err {mc_rel:.4f} (< 0.02)")


@pytest.mark.slow
def test_06_clt(clt_batch):
    params, _, batch = clt_batch
    loss = loss_statistics(params)
    verdicts, parts = [], []
    for which in Which:
        rep = clt_from_batch(batch, loss, which)
        rel = abs(rep.sample_var - rep.target_var) / rep.target_var
        verdicts += [rel < 0.10, rep.ks_distance < 0.08]
        parts.append(f"{which.value}: var {rep.sample_var:.5f} vs {rep.target_var:.5f} "
                     f"(rel {rel:.3f} < 0.10), KS {rep.ks_distance:.4f} (< 0.08)")
    assert record(6, "CLT for U and L", all(verdicts), "; ".join(parts))


@pytest.mark.slow
def test_07_ergodic_quadratic_variation(drou_ref):
    lhs, rhs = qv_ergodic_check(drou_ref, SimConfig(1e-3, 1e4, 7, Scheme.BRIDGE))
    rel = abs(lhs - rhs) / rhs
    assert record(7, "ergodic QV", rel < 0.05,
                  f"time average {lhs:.6f} vs eta_U^2 {rhs:.6f}, rel err {rel:.4f} (< 0.05)")


def test_08_cumulant_consistency(drou_ref):
    loss = loss_statistics(drou_ref)
    psi0 = psi_of_theta(drou_ref, 0.0)
    h1, h2 = 1e-4, 1e-2
    slope = (psi_of_theta(drou_ref, h1) - psi_of_theta(drou_ref, -h1)) / (2 * h1)
    curv = (psi_of_theta(drou_ref, h2) - 2 * psi0 + psi_of_theta(drou_ref, -h2)) / (h2 * h2)
    second = cumulant_curve(drou_ref, np.linspace(-0.5, 2.0, 41)).second_differences().min()
    r1 = abs(slope - loss.q_upper) / loss.q_upper
    r2 = abs(curv - loss.eta2_upper) / loss.eta2_upper
    ok = psi0 == 0.0 and r1 < 1e-3 and r2 < 0.05 and second >= -1e-8
    assert record(8, "cumulant consistency", ok,
                  f"psi(0)={psi0!r}, psi'(0) rel err {r1:.1e} (< 1e-3), "
                  f"psi''(0) rel err {r2:.2e} (< 0.05), min second difference {second:.3e}")


def test_09_legendre_tangency(drou_ref):
    q = loss_statistics(drou_ref).q_upper
    at_q = loss_ld_rate(drou_ref, q)
    at_closed_form = loss_ld_rate(drou_ref, Q_REF)
    above = loss_ld_rate(drou_ref, 1.5 * q)
    ok = abs(at_q) < 1e-8 and abs(at_closed_form) < 1e-8 and above < 0
    assert record(9, "Legendre tangency", ok,
                  f"rate(q_U) = {at_q!r}, rate(closed-form q_U) = {at_closed_form:.1e}, "
                  f"rate(1.5 q_U) = {above:.6f} (< 0)")


def test_10_skorokhod_suite():
    res = run_suite(1000, seed=10)
    failed = [k for k, v in res.items() if not v]
    assert record(10, "Skorokhod property suite", not failed,
                  "1000 paths, to 1e-12: " + (", ".join(f"{k} ok" for k in res) if not failed
                                              else "failed " + ", ".join(failed)))
