"""Counter-based random streams for reproducible, order-free Monte Carlo.

Every variate is a pure function of ``(key, counter)``:

    word(key, k)    = mix64(key + (k + 1) * GOLDEN)          (SplitMix64 output k)
    uniform(key, k) = ((word >> 11) + 0.5) / 2**53           in (0, 1)
    normal(key, k)  = Phi^{-1}(uniform(key, k))

so a stream is the SplitMix64 sequence seeded with ``key``.  Replication ``i``
of a batch seeded with ``seed`` uses ``key_i = rep_seed(seed, i)``, which is
output ``i`` of the SplitMix64 sequence seeded with ``seed``.  Nothing depends
on the order in which replications or steps are evaluated.

The inverse normal CDF is Acklam's rational approximation followed by one
Halley correction against ``math.erfc``, giving close to full double
precision on the whole of (0, 1).
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

__all__ = [
    "GOLDEN",
    "mix64",
    "rep_seed",
    "rep_seeds",
    "uniforms",
    "normals",
    "normal_ppf",
]

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
# second stream per replication (bridge scheme uniforms)
AUX_STREAM = np.uint64(0xD1B54A32D192ED03)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV_2_53 = 1.0 / 9007199254740992.0

_PA = np.array([-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00])
_PB = np.array([-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                6.680131188771972e+01, -1.328068155288572e+01])
_PC = np.array([-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00])
_PD = np.array([7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                3.754408661907416e+00])
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _as_u64(seed) -> np.uint64:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.uint64(seed)


@nb.njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(inline="always", cache=True)
def _word(key, k):
    return mix64(key + np.uint64(k + 1) * GOLDEN)


@nb.njit(inline="always", cache=True)
def uniform_at(key, k):
    return (float(_word(key, k) >> _S11) + 0.5) * _INV_2_53


@nb.njit(inline="always", cache=True)
def _ppf_lower(p):
    # p in (0, 0.5]
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_PC[0] * q + _PC[1]) * q + _PC[2]) * q + _PC[3]) * q + _PC[4]) * q + _PC[5])
             / ((((_PD[0] * q + _PD[1]) * q + _PD[2]) * q + _PD[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        x = ((((((_PA[0] * r + _PA[1]) * r + _PA[2]) * r + _PA[3]) * r + _PA[4]) * r + _PA[5]) * q
             / (((((_PB[0] * r + _PB[1]) * r + _PB[2]) * r + _PB[3]) * r + _PB[4]) * r + 1.0))
    # Halley step; x <= 0 so erfc(-x/sqrt2) carries no cancellation
    e = 0.5 * math.erfc(-x / _SQRT2) - p
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@nb.njit(inline="always", cache=True)
def normal_ppf(p):
    if p > 0.5:
        return -_ppf_lower(1.0 - p)
    return _ppf_lower(p)


@nb.njit(inline="always", cache=True)
def normal_at(key, k):
    return normal_ppf(uniform_at(key, k))


@nb.njit(inline="always", cache=True)
def aux_key(key):
    return mix64(key ^ AUX_STREAM)


@nb.njit(cache=True)
def _uniform_block(key, start, n):
    out = np.empty(n)
    for j in range(n):
        out[j] = uniform_at(key, start + j)
    return out


@nb.njit(cache=True)
def _normal_block(key, start, n):
    out = np.empty(n)
    for j in range(n):
        out[j] = normal_at(key, start + j)
    return out


@nb.njit(cache=True)
def _ppf_array(p):
    out = np.empty(p.size)
    for j in range(p.size):
        out[j] = normal_ppf(p[j])
    return out


@nb.njit(cache=True)
def _rep_seeds(seed, start, n):
    out = np.empty(n, dtype=np.uint64)
    for j in range(n):
        out[j] = _word(seed, start + j)
    return out


def rep_seed(seed: int, i: int) -> int:
    """Key of replication ``i`` in a batch seeded with ``seed``."""
    return int(_rep_seeds(_as_u64(seed), int(i), 1)[0])


def rep_seeds(seed: int, n: int, start: int = 0) -> np.ndarray:
    return _rep_seeds(_as_u64(seed), int(start), int(n))


def uniforms(key: int, n: int, start: int = 0) -> np.ndarray:
    """Uniforms ``start .. start+n-1`` of the stream keyed by ``key``."""
    return _uniform_block(_as_u64(key), int(start), int(n))


def normals(key: int, n: int, start: int = 0) -> np.ndarray:
    return _normal_block(_as_u64(key), int(start), int(n))


def inverse_normal_cdf(p) -> np.ndarray:
    p = np.ascontiguousarray(p, dtype=float).ravel()
    return _ppf_array(p)
