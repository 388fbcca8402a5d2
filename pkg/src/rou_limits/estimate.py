"""Monte Carlo checks: CLT for the loss and idleness processes, the ergodic
quadratic-variation identity, and tail probabilities with exact binomial
confidence intervals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .model import Boundary, ModelParams, ValidationError, validate
from .simulate import BatchTerminal, SimConfig, simulate_batch, time_average_on_grid
from .stationary import LossStatistics, h_prime_table, loss_statistics

__all__ = [
    "Which",
    "CltReport",
    "TailEstimate",
    "clt_from_batch",
    "clt_check",
    "clt_check_both",
    "qv_ergodic_check",
    "tail_probability",
    "clopper_pearson",
    "QV_GRID_POINTS",
]

QV_GRID_POINTS = 4001
MIN_CLT_REPS = 100


class Which(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True, eq=False)
class CltReport:
    """(R_T - q T)/sqrt(T) over replications, R = U or L, against N(0, eta^2)."""

    which: Which
    t_horizon: float
    reps: int
    normalized_samples: np.ndarray
    sample_mean: float
    sample_var: float
    target_var: float
    ks_distance: float
    rate: float

    def to_dict(self, samples: bool = False) -> dict:
        out = {"which": self.which.value, "t_horizon": self.t_horizon, "reps": self.reps,
               "sample_mean": self.sample_mean, "sample_var": self.sample_var,
               "target_var": self.target_var, "ks_distance": self.ks_distance,
               "rate": self.rate}
        if samples:
            out["normalized_samples"] = self.normalized_samples.tolist()
        return out


def _require_double(params: ModelParams) -> None:
    validate(params)
    if params.boundary is not Boundary.DOUBLE:
        raise ValidationError("CLT and ergodic checks need boundary Double(d)")


def clt_from_batch(batch: BatchTerminal, loss: LossStatistics, which: Which | str) -> CltReport:
    """Build a :class:`CltReport` from terminal regulators already simulated."""
    which = Which(which)
    if batch.reps < MIN_CLT_REPS:
        raise ValidationError(f"CLT check needs reps >= {MIN_CLT_REPS}")
    if which is Which.UPPER:
        reg, rate, target = batch.upper, loss.q_upper, loss.eta2_upper
    else:
        reg, rate, target = batch.lower, loss.q_lower, loss.eta2_lower
    T = batch.T
    z = (reg - rate * T) / math.sqrt(T)
    ks = stats.kstest(z, "norm", args=(0.0, math.sqrt(target))).statistic
    return CltReport(which, T, batch.reps, z, float(np.mean(z)), float(np.var(z, ddof=1)),
                     target, float(ks), rate)


def clt_check(params: ModelParams, cfg: SimConfig, reps: int, which: Which | str) -> CltReport:
    """Sample mean, variance and KS distance of the normalized regulator at
    ``cfg.horizon_T``; no verdict is attached."""
    return clt_check_both(params, cfg, reps)[Which(which)]


def clt_check_both(params: ModelParams, cfg: SimConfig, reps: int) -> dict[Which, CltReport]:
    """Reports for U and L from one batch of replications."""
    _require_double(params)
    if reps < MIN_CLT_REPS:
        raise ValidationError(f"CLT check needs reps >= {MIN_CLT_REPS}")
    loss = loss_statistics(params)
    batch = simulate_batch(params, cfg, reps)
    return {w: clt_from_batch(batch, loss, w) for w in Which}


def qv_ergodic_check(params: ModelParams, cfg: SimConfig) -> tuple[float, float]:
    """(time average of sigma^2 h'(Z_s)^2 along one path, eta_U^2 by quadrature).

    h' is tabulated on a uniform grid of ``QV_GRID_POINTS`` nodes over [0, d]
    and interpolated linearly inside the simulation loop.
    """
    _require_double(params)
    grid = np.linspace(0.0, float(params.d), QV_GRID_POINTS)
    values = params.sigma ** 2 * h_prime_table(params, grid, "upper") ** 2
    lhs, _ = time_average_on_grid(params, cfg, grid, values)
    return lhs, loss_statistics(params).eta2_upper


def clopper_pearson(hits: int, reps: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval; one-sided at the boundary when hits is 0 or reps."""
    alpha = 1.0 - level
    if hits == 0:
        return 0.0, 1.0 - alpha ** (1.0 / reps)
    if hits == reps:
        return alpha ** (1.0 / reps), 1.0
    lo = stats.beta.ppf(0.5 * alpha, hits, reps - hits + 1)
    hi = stats.beta.ppf(1.0 - 0.5 * alpha, hits + 1, reps - hits)
    return float(lo), float(hi)


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    hits: int
    reps: int

    def __iter__(self):
        return iter((self.p_hat, self.ci_low, self.ci_high))

    def to_dict(self) -> dict:
        return {"p_hat": self.p_hat, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "hits": self.hits, "reps": self.reps}


def tail_probability(params: ModelParams, cfg: SimConfig, T: float, b: float,
                     reps: int) -> TailEstimate:
    """Monte Carlo estimate of P(state_T >= b) with a 95% Clopper-Pearson interval.

    The process (OU, ROU or DROU) follows ``params.boundary``; ``T`` replaces
    ``cfg.horizon_T``.  Unpacks as ``(p_hat, ci_low, ci_high)``.
    """
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    batch = simulate_batch(params, replace(cfg, horizon_T=T), reps)
    hits = int(np.count_nonzero(batch.state >= b))
    lo, hi = clopper_pearson(hits, reps)
    return TailEstimate(hits / reps, lo, hi, hits, reps)
