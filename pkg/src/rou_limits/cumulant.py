"""Limiting cumulant psi(theta) = lim t^-1 log E exp(theta U_t) of the loss process.

psi(theta) is the root of h'(d, psi) = theta, where h'(d, psi) = y'(d)/y(d) and
y solves the linear boundary-value shoot

    sigma^2 y'' + (2 alpha - 2 gamma x) y' - 2 psi y = 0,   y(0) = 1, y'(0) = 0.

y(0) = 1 fixes the additive constant of h = log y; psi does not depend on it.
Below some negative psi the solution y reaches zero inside [0, d]; such psi
lie outside the admissible window and are reported as NumericalError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .model import Boundary, ModelParams, NumericalError, ValidationError, validate
from .stationary import loss_statistics

__all__ = [
    "CumulantCurve",
    "LossLdResult",
    "shoot_h_prime_at_d",
    "psi_of_theta",
    "cumulant_curve",
    "loss_ld_rate",
    "loss_ld",
    "SHOOT_RTOL",
    "SHOOT_ATOL",
]

SHOOT_RTOL = 1e-11
SHOOT_ATOL = 1e-12
ROOT_RESIDUAL = 1e-10


def _require_double(params: ModelParams) -> float:
    validate(params)
    if params.boundary is not Boundary.DOUBLE:
        raise ValidationError("the loss cumulant needs boundary Double(d)")
    return float(params.d)


def _rhs(x, y, a, g, s2, psi):
    return [y[1], (2.0 * psi * y[0] - (2.0 * a - 2.0 * g * x) * y[1]) / s2]


def _y_hits_zero(x, y, a, g, s2, psi):
    return y[0]


_y_hits_zero.terminal = True
_y_hits_zero.direction = -1


def shoot_h_prime_at_d(params: ModelParams, psi: float) -> float:
    """h'(d, psi) = y'(d)/y(d) from an adaptive 8th-order Runge-Kutta shoot.

    Raises
    ------
    NumericalError
        If y vanishes on [0, d], i.e. ``psi`` is below the admissible window.
    """
    d = _require_double(params)
    if not math.isfinite(psi):
        raise ValidationError("psi must be finite")
    if psi == 0.0:
        return 0.0
    sol = solve_ivp(_rhs, (0.0, d), [1.0, 0.0], method="DOP853", rtol=SHOOT_RTOL,
                    atol=SHOOT_ATOL, events=_y_hits_zero,
                    args=(params.alpha, params.gamma, params.sigma ** 2, psi))
    if sol.status == 1 or sol.y[0, -1] <= 0.0:
        raise NumericalError(f"y(x) reaches 0 inside [0, d] for psi={psi!r}: "
                             "outside the admissible window")
    if sol.status != 0:
        raise NumericalError(f"shooting failed for psi={psi!r}: {sol.message}")
    return float(sol.y[1, -1] / sol.y[0, -1])


def _try(params: ModelParams, psi: float) -> float | None:
    try:
        return shoot_h_prime_at_d(params, psi)
    except NumericalError:
        return None


def _bracket(params: ModelParams, theta: float, max_expansions: int) -> tuple[float, float]:
    # h'(d, .) increases through 0 at psi = 0, so the root has the sign of theta
    step = 0.5 * params.sigma ** 2
    if theta > 0:
        lo, hi = 0.0, step
        for _ in range(max_expansions):
            if shoot_h_prime_at_d(params, hi) > theta:
                return lo, hi
            lo, hi = hi, 2.0 * hi
        raise NumericalError(f"no bracket for theta={theta!r}: h'(d, {lo!r}) still below theta")
    # theta < 0: walk left from 0, backing off toward the last admissible point
    # whenever the shoot leaves the window; h' -> -inf at the window edge
    inside, probe, edge = 0.0, -step, None
    for _ in range(max_expansions):
        val = _try(params, probe)
        if val is None:
            edge = probe
        elif val < theta:
            return probe, inside
        else:
            inside = probe
        probe = 2.0 * inside - step if edge is None else 0.5 * (inside + edge)
        if edge is None:
            step *= 2.0
    raise NumericalError(f"no bracket for theta={theta!r}: admissible window found is "
                         f"({edge!r}, inf) with h'(d, {inside!r}) still above theta")


def psi_of_theta(params: ModelParams, theta: float, max_expansions: int = 60) -> float:
    """Root psi of h'(d, psi) = theta.

    The bracket starts at [-1, 1] * sigma^2/2 (the side matching the sign of
    theta) and grows geometrically; on the negative side it backs off toward
    zero when the shoot leaves the admissible window.  The root is then found
    by Brent's method and its residual checked against 1e-10.
    """
    _require_double(params)
    if not math.isfinite(theta):
        raise ValidationError("theta must be finite")
    if theta == 0.0:
        return 0.0
    lo, hi = _bracket(params, theta, max_expansions)
    psi = brentq(lambda p: shoot_h_prime_at_d(params, p) - theta, lo, hi,
                 xtol=1e-15, rtol=1e-15, maxiter=200)
    residual = abs(shoot_h_prime_at_d(params, psi) - theta)
    if residual > ROOT_RESIDUAL * max(1.0, abs(theta)):
        raise NumericalError(f"root residual {residual:.3g} at theta={theta!r} exceeds tolerance")
    return float(psi)


@dataclass(frozen=True, eq=False)
class CumulantCurve:
    theta_grid: np.ndarray
    psi_values: np.ndarray
    shoot_tol: float

    def second_differences(self) -> np.ndarray:
        return np.diff(self.psi_values, 2)


def cumulant_curve(params: ModelParams, theta_grid) -> CumulantCurve:
    grid = np.asarray(theta_grid, dtype=float)
    psi = np.array([psi_of_theta(params, float(t)) for t in grid])
    return CumulantCurve(grid, psi, ROOT_RESIDUAL)


@dataclass(frozen=True)
class LossLdResult:
    c: float
    rate: float
    argmax_theta: float

    def to_dict(self) -> dict:
        return {"c": self.c, "rate": self.rate, "argmax_theta": self.argmax_theta}


def loss_ld(params: ModelParams, c: float) -> LossLdResult:
    """Rate -sup_{theta >= 0} (theta c - psi(theta)) and its maximizer.

    For c <= q_U the supremum sits at theta = 0 and the rate is 0.  Otherwise
    the objective is concave with positive slope at 0; the search interval
    doubles until the objective turns down, then golden-section search
    locates the maximum.
    """
    if not (math.isfinite(c) and c > 0):
        raise ValidationError("c must be > 0")
    stats = loss_statistics(params)
    q_upper = stats.q_upper
    if c <= q_upper:
        return LossLdResult(c, 0.0, 0.0)

    def neg(theta: float) -> float:
        return psi_of_theta(params, theta) - theta * c

    # start near the quadratic-approximation maximizer (c - q_U)/eta_U^2
    mid = 0.5 * (c - q_upper) / max(stats.eta2_upper, 1e-12)
    f_mid = neg(mid)
    while neg(0.5 * mid) < f_mid:
        mid *= 0.5
        f_mid = neg(mid)
    hi = 2.0 * mid
    f_hi = neg(hi)
    for _ in range(60):
        if f_hi > f_mid:
            break
        mid, f_mid = hi, f_hi
        hi = 2.0 * hi
        f_hi = neg(hi)
    else:
        raise NumericalError(f"no maximizer found for c={c!r}")
    res = minimize_scalar(neg, bracket=(0.0, mid, hi), method="golden",
                          options={"xtol": 1e-10})
    theta = float(res.x)
    value = -float(res.fun)
    if value < 0:
        raise NumericalError(f"Legendre transform came out negative for c={c!r}")
    return LossLdResult(c, -value, theta)


def loss_ld_rate(params: ModelParams, c: float) -> float:
    """lim t^-1 log P(U_t > c t) by the Gartner-Ellis theorem; always <= 0."""
    return loss_ld(params, c).rate
