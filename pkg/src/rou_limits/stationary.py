"""Long-run loss and idleness statistics of the doubly reflected OU process.

With the weight W(v) = exp((2 alpha v - gamma v^2) / sigma^2) and its running
ratio G(x) = int_0^x W(v)/W(x) dv, the mean loss and idleness rates are

    q_U = (sigma^2/2) W(d) / int_0^d W,        q_L = (sigma^2/2) / int_0^d W,

and the CLT variances are sigma^2 int_0^d h'(x)^2 pi(dx) with
h'_U(x) = (2 q_U/sigma^2) G(x) and h'_L(x) = -1/W(x) + (2 q_L/sigma^2) G(x),
where pi is the stationary law (normal N(alpha/gamma, sigma^2/(2 gamma))
truncated to [0, d]).  W ratios are always formed as exp of exponent
differences so that small sigma or large d cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Boundary, ModelParams, NumericalError, ValidationError, validate
from .quadrature import integrate
from .special import norm_cdf, norm_pdf, norm_sf

__all__ = [
    "LossStatistics",
    "weight_W",
    "stationary_density",
    "lemma7_h",
    "h_prime_table",
    "loss_statistics",
    "QUAD_TOL",
]

QUAD_TOL = 1e-10


def _require_double(params: ModelParams) -> float:
    validate(params)
    if params.boundary is not Boundary.DOUBLE:
        raise ValidationError("stationary statistics need boundary Double(d)")
    return float(params.d)


def _exponent(params: ModelParams, v):
    return (2.0 * params.alpha * v - params.gamma * v * v) / params.sigma ** 2


def _exponent_gap(params: ModelParams, v, x):
    # E(v) - E(x) factored to avoid cancellation between two large exponents
    return (v - x) * (2.0 * params.alpha - params.gamma * (v + x)) / params.sigma ** 2


def weight_W(params: ModelParams, v):
    """W(v) = exp(2 alpha v / sigma^2 - gamma v^2 / sigma^2)."""
    out = np.exp(_exponent(params, np.asarray(v, dtype=float)))
    return out if np.ndim(out) else float(out)


def stationary_density(params: ModelParams, x):
    """Density of the DROU stationary law at ``x`` in [0, d]."""
    d = _require_double(params)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > d):
        raise ValidationError("x must lie in [0, d]")
    m = params.alpha / params.gamma
    k = math.sqrt(2.0 * params.gamma) / params.sigma
    lo, hi = -m * k, (d - m) * k
    # difference of tails when both ends sit in the upper tail, else of cdfs
    mass = norm_sf(lo) - norm_sf(hi) if lo > 0 else norm_cdf(hi) - norm_cdf(lo)
    out = k * np.asarray(norm_pdf((x - m) * k)) / mass
    return out if out.ndim else float(out)


class _Kernel:
    """Overflow-free pieces of h'_U, h'_L and pi for one parameter set.

    With S = int_0^d W / W(top), top the maximizer of W on [0, d], and the
    memoized inner integral I(x) = int_0^x W(v)/W(m_x) dv, m_x = min(top, x):

        h'_U(x) = I(x)/S * exp(E(d) - E(top) + E(m_x) - E(x)),
        h'_L(x) = exp(E(0) - E(x)) * (-1 + exp(E(m_x) - E(top)) I(x)/S),
        pi(x)   = exp(E(x) - E(top)) / S.
    """

    def __init__(self, params: ModelParams, d: float, tol: float):
        self.params = params
        self.d = d
        self.tol = tol
        self.top = min(max(params.alpha / params.gamma, 0.0), d)
        res = integrate(lambda v: np.exp(_exponent_gap(params, v, self.top)), 0.0, d, tol * 0.1)
        self.scaled = res.value
        self.max_err = res.error
        self.cache: dict[float, float] = {}

    def inner(self, x: float) -> float:
        got = self.cache.get(x)
        if got is None:
            m = min(self.top, x)
            res = integrate(lambda v: np.exp(_exponent_gap(self.params, v, m)), 0.0, x,
                            self.tol * 0.01)
            self.max_err = max(self.max_err, res.error)
            got = self.cache[x] = res.value
        return got

    def rates(self) -> tuple[float, float]:
        half_s2 = 0.5 * self.params.sigma ** 2
        return (half_s2 * math.exp(_exponent_gap(self.params, self.d, self.top)) / self.scaled,
                half_s2 * math.exp(_exponent_gap(self.params, 0.0, self.top)) / self.scaled)

    def _parts(self, xs):
        xs = np.asarray(xs, dtype=float)
        inner = np.array([self.inner(float(x)) for x in xs.ravel()]).reshape(xs.shape)
        return xs, np.minimum(self.top, xs), inner / self.scaled

    def h_prime_upper(self, xs):
        p = self.params
        xs, m, ratio = self._parts(xs)
        return ratio * np.exp(_exponent_gap(p, self.d, self.top) + _exponent_gap(p, m, xs))

    def h_prime_lower(self, xs):
        p = self.params
        xs, m, ratio = self._parts(xs)
        return np.exp(_exponent_gap(p, 0.0, xs)) * (
            -1.0 + np.exp(_exponent_gap(p, m, self.top)) * ratio)

    def density(self, xs):
        return np.exp(_exponent_gap(self.params, np.asarray(xs, dtype=float), self.top)) / self.scaled

    def lower_integrand(self, xs):
        # h'_L^2 pi with the exp(E(0) - E(x)) factors merged before exponentiating
        p = self.params
        xs, m, ratio = self._parts(xs)
        core = -1.0 + np.exp(_exponent_gap(p, m, self.top)) * ratio
        scale = _exponent_gap(p, 0.0, xs) + _exponent_gap(p, 0.0, self.top)
        return core * core * np.exp(scale) / self.scaled


def lemma7_h(params: ModelParams, x: float, tol: float = QUAD_TOL) -> tuple[float, float]:
    """Solution h of (alpha - gamma x) h' + (sigma^2/2) h'' = q_U with
    h(0) = h'(0) = 0, h'(d) = 1, and its derivative, at ``x``.

    Returns
    -------
    (h(x), h'(x))
    """
    d = _require_double(params)
    if not 0 <= x <= d:
        raise ValidationError("x must lie in [0, d]")
    k = _Kernel(params, d, tol)
    h_prime = float(k.h_prime_upper(float(x)))
    h = integrate(k.h_prime_upper, 0.0, float(x), tol).value
    return h, h_prime


def h_prime_table(params: ModelParams, grid, which: str = "upper",
                  tol: float = QUAD_TOL) -> np.ndarray:
    """h'_U (``which="upper"``) or h'_L (``"lower"``) on a grid in [0, d]."""
    d = _require_double(params)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > d):
        raise ValidationError("grid must lie in [0, d]")
    k = _Kernel(params, d, tol)
    if which == "upper":
        return k.h_prime_upper(grid)
    if which == "lower":
        return k.h_prime_lower(grid)
    raise ValidationError("which must be 'upper' or 'lower'")


@dataclass(frozen=True)
class LossStatistics:
    q_upper: float
    q_lower: float
    eta2_upper: float
    eta2_lower: float
    quad_tol: float

    def to_dict(self) -> dict:
        return {"q_upper": self.q_upper, "q_lower": self.q_lower,
                "eta2_upper": self.eta2_upper, "eta2_lower": self.eta2_lower,
                "quad_tol": self.quad_tol}


def loss_statistics(params: ModelParams, tol: float = QUAD_TOL) -> LossStatistics:
    """Mean rates and CLT variances of the loss (U) and idleness (L) processes.

    ``quad_tol`` of the result is the largest error estimate among the
    quadratures involved, or ``tol`` if that is larger.
    """
    d = _require_double(params)
    s2 = params.sigma ** 2
    k = _Kernel(params, d, tol)
    q_upper, q_lower = k.rates()
    up = integrate(lambda x: k.h_prime_upper(x) ** 2 * k.density(x), 0.0, d, tol / s2)
    lo = integrate(k.lower_integrand, 0.0, d, tol / s2)
    eta2_upper = s2 * up.value
    eta2_lower = s2 * lo.value
    if q_upper == 0.0 or q_lower == 0.0:
        raise NumericalError("a boundary rate underflows double precision")
    if not (eta2_upper >= 0 and eta2_lower >= 0 and math.isfinite(eta2_lower)):
        raise NumericalError("CLT variance is not a finite nonnegative number")
    achieved = max(tol, k.max_err, s2 * up.error, s2 * lo.error)
    return LossStatistics(q_upper, q_lower, eta2_upper, eta2_lower, achieved)
