"""Parameter and path types shared by the rest of the package.

A :class:`ModelParams` value fully determines the law of the process

    dX = (alpha - gamma X) dt + sqrt(epsilon) sigma dB  (+ dL - dU),

where the regulators L (at 0) and U (at d) are present depending on the
boundary regime.  Paths live on uniform grids (:class:`DiscretePath`).
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Union

import numpy as np

__all__ = [
    "Boundary",
    "ModelParams",
    "DiscretePath",
    "ReflectedTriple",
    "QueryParams",
    "ValidationError",
    "NumericalError",
    "validate",
    "CONTAINMENT_TOL",
    "write_path_csv",
    "write_triple_csv",
    "read_path_csv",
    "read_triple_csv",
]

CONTAINMENT_TOL = 1e-12


class ValidationError(ValueError):
    """A standing model assumption or an operation precondition is violated."""


class NumericalError(RuntimeError):
    """Quadrature, shooting or root bracketing failed to reach its tolerance."""


class Boundary(enum.Enum):
    FREE = "Free"
    LOWER = "LowerAtZero"
    DOUBLE = "Double"


@dataclass(frozen=True)
class ModelParams:
    """Coefficients, noise scale, boundary regime and initial state.

    ``d`` is the upper reflection level and is only meaningful (and required)
    when ``boundary`` is :attr:`Boundary.DOUBLE`.
    """

    alpha: float
    gamma: float
    sigma: float
    epsilon: float = 1.0
    boundary: Boundary = Boundary.FREE
    x0: float = 0.0
    d: float | None = None

    @property
    def mean_level(self) -> float:
        """Mean-reversion level alpha/gamma."""
        return self.alpha / self.gamma

    @property
    def mean_below_upper(self) -> bool | None:
        if self.boundary is not Boundary.DOUBLE or self.d is None:
            return None
        return self.alpha / self.gamma < self.d

    def drift(self, x):
        return self.alpha - self.gamma * x

    def to_dict(self) -> dict[str, Any]:
        boundary: dict[str, Any] = {"kind": self.boundary.value}
        if self.boundary is Boundary.DOUBLE:
            boundary["d"] = self.d
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "epsilon": self.epsilon,
            "boundary": boundary,
            "x0": self.x0,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelParams":
        raw = data.get("boundary", "Free")
        d = None
        if isinstance(raw, str):
            kind = raw
            d = data.get("d")
        else:
            kind = raw["kind"]
            d = raw.get("d")
        try:
            boundary = Boundary(kind)
        except ValueError:
            raise ValidationError(f"unknown boundary kind {kind!r}") from None
        return cls(
            alpha=float(data["alpha"]),
            gamma=float(data["gamma"]),
            sigma=float(data["sigma"]),
            epsilon=float(data.get("epsilon", 1.0)),
            boundary=boundary,
            x0=float(data.get("x0", 0.0)),
            d=None if d is None else float(d),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def validate(params: ModelParams, *, allow_zero_noise: bool = False) -> ModelParams:
    """Check the standing assumptions and return ``params`` unchanged.

    ``allow_zero_noise`` relaxes ``sigma > 0`` and ``epsilon > 0`` to
    ``>= 0``; it exists for deterministic simulation checks only.

    Raises
    ------
    ValidationError
        Naming the first violated assumption.
    """
    for name in ("alpha", "gamma", "sigma", "epsilon", "x0"):
        if not math.isfinite(getattr(params, name)):
            raise ValidationError(f"{name} must be finite")
    if not params.gamma > 0:
        raise ValidationError("gamma must be > 0")
    if allow_zero_noise:
        if params.sigma < 0:
            raise ValidationError("sigma must be >= 0")
        if params.epsilon < 0:
            raise ValidationError("epsilon must be >= 0")
    else:
        if not params.sigma > 0:
            raise ValidationError("sigma must be > 0")
        if not params.epsilon > 0:
            raise ValidationError("epsilon must be > 0")
    if params.boundary is Boundary.LOWER:
        if not params.alpha > 0:
            raise ValidationError("alpha must be > 0 for reflected lower boundary")
        if params.x0 < 0:
            raise ValidationError("x0 must be >= 0 for reflected lower boundary")
    elif params.boundary is Boundary.DOUBLE:
        d = params.d
        if d is None or not math.isfinite(d):
            raise ValidationError("d must be given for double reflection")
        if not d > 0:
            raise ValidationError("d must be > 0")
        if not 0 <= params.x0 <= d:
            raise ValidationError("x0 must lie in [0, d] for double reflection")
    return params


@dataclass(frozen=True, eq=False)
class DiscretePath:
    """Samples of a path on the uniform grid ``t0 + k*dt``, k = 0..n."""

    t0: float
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not self.dt > 0:
            raise ValidationError("dt must be > 0")
        if values.ndim != 1 or values.size < 2:
            raise ValidationError("a path needs at least two samples")

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def T(self) -> float:
        return self.n * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values) -> "DiscretePath":
        return DiscretePath(self.t0, self.dt, values)


@dataclass(frozen=True, eq=False)
class ReflectedTriple:
    """Joint state/idleness/loss paths of a reflected process."""

    state: DiscretePath
    lower: DiscretePath
    upper: DiscretePath

    def violations(self, d: float | None = None, tol: float = CONTAINMENT_TOL,
                   complementarity: bool = True) -> list[str]:
        """Return the invariants this triple breaks (empty when all hold).

        Grid-level complementarity only holds for the projection scheme; pass
        ``complementarity=False`` for bridge-corrected paths, whose regulators
        may also grow on steps that end strictly inside the domain.
        """
        out = []
        z, lo, up = self.state.values, self.lower.values, self.upper.values
        if not (z.size == lo.size == up.size):
            return ["state, lower and upper have different lengths"]
        if lo[0] != 0 or up[0] != 0:
            out.append("regulators must start at 0")
        dlo, dup = np.diff(lo), np.diff(up)
        if np.any(dlo < -tol) or np.any(dup < -tol):
            out.append("regulators must be nondecreasing")
        if np.any(z < -tol):
            out.append("state below 0")
        if d is not None and np.any(z > d + tol):
            out.append("state above d")
        if complementarity and np.any((dlo > 0) & (z[1:] > tol)):
            out.append("lower regulator grows away from 0")
        if d is not None:
            if complementarity and np.any((dup > 0) & (z[1:] < d - tol)):
                out.append("upper regulator grows away from d")
        elif np.any(up != 0):
            out.append("upper regulator active without an upper boundary")
        return out


@dataclass(frozen=True)
class QueryParams:
    horizon_T: float
    level_b: float
    level_a: float | None = None

    def __post_init__(self):
        if not self.horizon_T > 0:
            raise ValidationError("horizon_T must be > 0")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"horizon_T": self.horizon_T, "level_b": self.level_b}
        if self.level_a is not None:
            out["level_a"] = self.level_a
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "QueryParams":
        a = data.get("level_a")
        return cls(float(data["horizon_T"]), float(data["level_b"]),
                   None if a is None else float(a))


# -- CSV ---------------------------------------------------------------------

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_out(dest: PathLike | IO[str]):
    if isinstance(dest, (str, Path)):
        return open(dest, "w", newline=""), True
    return dest, False


def _write_rows(dest, header, columns) -> None:
    fh, owned = _open_out(dest)
    try:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if owned:
            fh.close()


def write_path_csv(dest: PathLike | IO[str], path: DiscretePath) -> None:
    _write_rows(dest, ("t", "value"), (path.times, path.values))


def write_triple_csv(dest: PathLike | IO[str], triple: ReflectedTriple) -> None:
    _write_rows(dest, ("t", "z", "l", "u"),
                (triple.state.times, triple.state.values,
                 triple.lower.values, triple.upper.values))


def _read_columns(src: PathLike | IO[str]) -> tuple[list[str], np.ndarray]:
    if isinstance(src, (str, Path)):
        text = Path(src).read_text()
    else:
        text = src.read()
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    return header, rows


def _grid_from_times(t: np.ndarray) -> tuple[float, float]:
    n = t.size - 1
    if n < 1:
        raise ValidationError("a path needs at least two samples")
    dt = (t[-1] - t[0]) / n
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValidationError("path times must be uniformly spaced")
    return float(t[0]), float(dt)


def read_path_csv(src: PathLike | IO[str]) -> DiscretePath:
    header, rows = _read_columns(src)
    if header != ["t", "value"]:
        raise ValidationError(f"expected header t,value, got {','.join(header)}")
    t0, dt = _grid_from_times(rows[:, 0])
    return DiscretePath(t0, dt, rows[:, 1])


def read_triple_csv(src: PathLike | IO[str]) -> ReflectedTriple:
    header, rows = _read_columns(src)
    if header != ["t", "z", "l", "u"]:
        raise ValidationError(f"expected header t,z,l,u, got {','.join(header)}")
    t0, dt = _grid_from_times(rows[:, 0])
    return ReflectedTriple(*(DiscretePath(t0, dt, rows[:, k]) for k in (1, 2, 3)))
