"""Small-noise large deviations for OU, ROU and DROU.

The noiseless flow is x(t) = alpha/gamma + (x0 - alpha/gamma) exp(-gamma t).
For a level b above x(T), the three processes share the decay rate

    lim_{eps->0} eps log P(X_T >= b) = -(b - x(T))^2 / ((1 - exp(-2 gamma T)) sigma^2 / gamma),

attained along the path f*(t) = x(t) + (b - x(T)) sinh(gamma t) / sinh(gamma T),
which stays in [0, inf) (ROU) and in [0, d] when alpha/gamma < d (DROU).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .model import (Boundary, DiscretePath, ModelParams, NumericalError, ValidationError,
                    validate)
from .simulate import Scheme, SimConfig, simulate_batch
from .special import log_norm_sf

__all__ = [
    "Regime",
    "Variant",
    "MostLikelyPath",
    "DecayRateReport",
    "EmpiricalDecayPoint",
    "zeroth_order_path",
    "zeroth_order_discrete",
    "most_likely_path",
    "decay_rate",
    "rate_functional",
    "ou_transient_moments",
    "gaussian_tail_decay",
    "empirical_decay_rate",
    "BOUNDARY_TOL",
]

BOUNDARY_TOL = 1e-9


class Regime(enum.Enum):
    OU = "ou"
    ROU = "rou"
    DROU = "drou"

    @classmethod
    def of(cls, boundary: Boundary) -> "Regime":
        return {Boundary.FREE: cls.OU, Boundary.LOWER: cls.ROU, Boundary.DOUBLE: cls.DROU}[boundary]


class Variant(enum.Enum):
    I = "I"
    IPLUS = "Iplus"
    IPLUSPLUS = "Iplusplus"


def zeroth_order_path(params: ModelParams, t):
    """Noiseless flow x(t) started at ``params.x0``; vectorized in ``t``."""
    m = params.alpha / params.gamma
    t = np.asarray(t, dtype=float)
    out = m + (params.x0 - m) * np.exp(-params.gamma * t)
    return out if out.ndim else float(out)


def zeroth_order_discrete(params: ModelParams, T: float, dt: float) -> DiscretePath:
    n = int(round(T / dt))
    return DiscretePath(0.0, dt, zeroth_order_path(params, dt * np.arange(n + 1)))


def _sinh_ratio(gamma: float, t, T: float):
    # sinh(gamma t) / sinh(gamma T) without overflow for large gamma T
    t = np.asarray(t, dtype=float)
    return (np.exp(gamma * (t - T)) - np.exp(-gamma * (t + T))) / -np.expm1(-2.0 * gamma * T)


@dataclass(frozen=True)
class MostLikelyPath:
    """Minimizer of the OU action among paths from x0 to ``a`` on [0, T]."""

    params: ModelParams
    a: float
    T: float
    C: float

    def __call__(self, t):
        return self.sinh_form(t)

    def sinh_form(self, t):
        p = self.params
        xT = zeroth_order_path(p, self.T)
        out = zeroth_order_path(p, t) + (self.a - xT) * _sinh_ratio(p.gamma, t, self.T)
        return out if np.ndim(out) else float(out)

    def c_form(self, t):
        """(C - alpha/gamma) e^{gamma t} + (x0 - C) e^{-gamma t} + alpha/gamma.

        The two exponentials nearly cancel for large gamma T, costing about
        gamma T / ln 10 digits; ``sinh_form`` is the accurate evaluation.
        """
        p = self.params
        m = p.alpha / p.gamma
        t = np.asarray(t, dtype=float)
        out = (self.C - m) * np.exp(p.gamma * t) + (p.x0 - self.C) * np.exp(-p.gamma * t) + m
        return out if out.ndim else float(out)

    def sample(self, dt: float) -> DiscretePath:
        n = int(round(self.T / dt))
        if n < 1 or abs(n * dt - self.T) > 1e-9 * self.T:
            raise ValidationError("T must be an integer multiple of dt")
        return DiscretePath(0.0, dt, self.sinh_form(dt * np.arange(n + 1)))

    @property
    def cost(self) -> float:
        """Action of the path, (a - x(T))^2 gamma / ((1 - e^{-2 gamma T}) sigma^2)."""
        return _gaussian_cost(self.params, self.T, self.a)


def most_likely_path(params: ModelParams, T: float, a: float) -> MostLikelyPath:
    if not T > 0:
        raise ValidationError("T must be > 0")
    g, x = params.gamma, params.x0
    m = params.alpha / g
    e1 = math.exp(-g * T)
    e2 = -math.expm1(-2.0 * g * T)
    # C = (a - m + m e^{gT} - x e^{-gT}) / (e^{gT} - e^{-gT}), scaled by e^{-gT}
    C = ((a - m) * e1 + m - x * e1 * e1) / e2
    return MostLikelyPath(params, float(a), float(T), C)


def _gaussian_cost(params: ModelParams, T: float, b: float) -> float:
    xT = zeroth_order_path(params, T)
    g = params.gamma
    return (b - xT) ** 2 / (-math.expm1(-2.0 * g * T) * params.sigma ** 2 / g)


@dataclass(frozen=True)
class DecayRateReport:
    rate: float
    mlp: MostLikelyPath
    regime: Regime
    x_T: float

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "regime": self.regime.value,
            "x_T": self.x_T,
            "T": self.mlp.T,
            "b": self.mlp.a,
            "mlp": {"C": self.mlp.C, "a": self.mlp.a, "T": self.mlp.T},
        }


def decay_rate(params: ModelParams, T: float, b: float, regime: Regime | str) -> DecayRateReport:
    """Decay rate of P(X_T >= b) as eps -> 0, with its most likely path.

    Raises
    ------
    ValidationError
        "not a rare event" if b <= x(T); for DROU "upper boundary below
        target" if b > d and "assumption alpha/gamma < d violated".
    """
    regime = Regime(regime)
    validate(params)
    if not T > 0:
        raise ValidationError("T must be > 0")
    xT = zeroth_order_path(params, T)
    if not b > xT:
        raise ValidationError(f"not a rare event: b={b!r} <= x(T)={xT!r}")
    if regime is not Regime.OU:
        if not params.alpha > 0:
            raise ValidationError("alpha must be > 0 for reflected lower boundary")
        if params.x0 < 0:
            raise ValidationError("x0 must be >= 0 for reflected lower boundary")
    if regime is Regime.DROU:
        d = params.d
        if d is None:
            raise ValidationError("DROU needs an upper level d")
        if b > d:
            raise ValidationError(f"upper boundary below target: b={b!r} > d={d!r}")
        if not params.alpha / params.gamma < d:
            raise ValidationError("assumption alpha/gamma < d violated")
        if not 0 <= params.x0 <= d:
            raise ValidationError("x0 must lie in [0, d] for double reflection")
    mlp = most_likely_path(params, T, b)
    if regime is not Regime.OU:
        # the OU optimizer must be admissible for the reflected problem
        grid = mlp.sinh_form(np.linspace(0.0, T, 1001))
        hi = params.d if regime is Regime.DROU else math.inf
        if grid.min() < -1e-12 or grid.max() > hi + 1e-12 * max(1.0, abs(hi)):
            raise NumericalError("most likely path leaves the reflection domain")
    return DecayRateReport(-_gaussian_cost(params, T, b), mlp, regime, xT)


def rate_functional(path: DiscretePath, params: ModelParams, variant: Variant | str = Variant.I,
                    *, drift: Callable[[np.ndarray], np.ndarray] | None = None,
                    boundary_tol: float = BOUNDARY_TOL) -> float:
    """Action (1/2 sigma^2) int (f' - b(f) + corrections)^2 dt of a grid path.

    ``I`` is the unconstrained OU action.  ``Iplus`` (reflection at 0) adds
    -b(0)^- where the path sits at 0; ``Iplusplus`` (reflection into [0, d])
    additionally adds +b(d)^+ where it sits at d.  A sample counts as "at"
    a boundary when within ``boundary_tol`` of it.  Paths leaving the domain
    get ``math.inf``.  ``drift`` defaults to alpha - gamma x.

    f' uses central differences (one-sided at the ends) and the integral the
    composite trapezoid rule, so the discretization error is O(dt^2).
    """
    variant = Variant(variant)
    f = path.values
    if abs(f[0] - params.x0) > 1e-9 * max(1.0, abs(params.x0)):
        raise ValidationError(f"path starts at {f[0]!r}, expected x0={params.x0!r}")
    b = params.drift if drift is None else drift
    fprime = np.gradient(f, path.dt)
    resid = fprime - np.asarray(b(f), dtype=float)
    if variant is Variant.IPLUS or variant is Variant.IPLUSPLUS:
        if np.any(f < -boundary_tol):
            return math.inf
        b0 = float(b(np.float64(0.0)))
        resid = resid - np.where(np.abs(f) <= boundary_tol, max(-b0, 0.0), 0.0)
    if variant is Variant.IPLUSPLUS:
        d = params.d
        if d is None:
            raise ValidationError("Iplusplus needs an upper level d")
        if np.any(f > d + boundary_tol):
            return math.inf
        bd = float(b(np.float64(d)))
        resid = resid + np.where(np.abs(f - d) <= boundary_tol, max(bd, 0.0), 0.0)
    sq = resid * resid
    integral = path.dt * (sq.sum() - 0.5 * (sq[0] + sq[-1]))
    return float(integral / (2.0 * params.sigma ** 2))


def ou_transient_moments(params: ModelParams, T: float) -> tuple[float, float]:
    """Mean and variance of the OU state at time T (noise scale included)."""
    g = params.gamma
    var = params.epsilon * params.sigma ** 2 / (2.0 * g) * -math.expm1(-2.0 * g * T)
    return zeroth_order_path(params, T), var


def gaussian_tail_decay(params: ModelParams, T: float, b: float,
                        eps_grid: Sequence[float]) -> list[tuple[float, float]]:
    """eps log P(X_T >= b) from the exact Gaussian law of the OU state."""
    out = []
    for eps in eps_grid:
        mean, var = ou_transient_moments(_with_eps(params, eps), T)
        z = (b - mean) / math.sqrt(var)
        out.append((float(eps), float(eps * log_norm_sf(z))))
    return out


def _with_eps(params: ModelParams, eps: float) -> ModelParams:
    return replace(params, epsilon=float(eps))


@dataclass(frozen=True)
class EmpiricalDecayPoint:
    """Monte Carlo estimate of eps log P(X_T >= b) at one noise level.

    When no replication hits the level, ``p_hat`` is 0, ``below_resolution``
    is set and ``value`` is eps log of the one-sided 95% Clopper-Pearson
    upper bound 1 - 0.05^(1/reps) (an upper bound on the true value).
    ``se`` is the delta-method standard error eps sqrt((1-p)/(reps p)).
    """

    epsilon: float
    hits: int
    reps: int
    p_hat: float
    value: float
    se: float
    below_resolution: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("epsilon", "hits", "reps", "p_hat", "value", "se", "below_resolution")}


def _decay_point(eps: float, hits: int, reps: int) -> EmpiricalDecayPoint:
    if hits == 0:
        upper = -math.expm1(math.log(0.05) / reps)
        return EmpiricalDecayPoint(eps, 0, reps, 0.0, eps * math.log(upper), math.nan, True)
    p = hits / reps
    se = eps * math.sqrt((1.0 - p) / (reps * p))
    return EmpiricalDecayPoint(eps, hits, reps, p, eps * math.log(p), se, False)


def empirical_decay_rate(params: ModelParams, T: float, b: float, eps_grid: Sequence[float],
                         reps: int, *, dt: float = 1e-3, seed: int = 0,
                         scheme: Scheme = Scheme.PROJECTION) -> list[EmpiricalDecayPoint]:
    """Simulated eps log P(X_T >= b) for each eps, in the regime of ``params``.

    Every noise level reuses ``seed``, so the normal streams (and, for equal
    seeds, the free and reflected runs) are coupled across calls.
    """
    eps_grid = [float(e) for e in eps_grid]
    if any(not e > 0 for e in eps_grid):
        raise ValidationError("all epsilon values must be > 0")
    if any(a <= b_ for a, b_ in zip(eps_grid, eps_grid[1:])):
        raise ValidationError("eps_grid must be strictly decreasing")
    xT = zeroth_order_path(params, T)
    if not b > xT:
        raise ValidationError(f"not a rare event: b={b!r} <= x(T)={xT!r}")
    cfg = SimConfig(dt=dt, horizon_T=T, seed=seed, scheme=scheme)
    out = []
    for eps in eps_grid:
        hits = simulate_batch(_with_eps(params, eps), cfg, reps,
                              lambda batch: int(np.count_nonzero(batch.state >= b)))
        out.append(_decay_point(eps, hits, reps))
    return out
