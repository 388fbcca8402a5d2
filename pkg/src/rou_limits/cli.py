"""Command-line front end: ``rou-limits <command> [flags]``.

Every command reads model parameters from flags and/or ``--config file.json``
(flags win).  The config file may hold ``params`` (ModelParams fields),
``sim`` (dt, horizon_T, seed, scheme), ``query`` (horizon_T, level_b, level_a)
and ``options`` (command-specific flags, by their long name with dashes
replaced by underscores).  JSON payloads go to stdout, CSV artifacts to
``--out`` (or stdout when no JSON is printed), summaries to stderr.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 64 unknown command.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .cumulant import cumulant_curve, loss_ld
from .estimate import Which, clt_from_batch, qv_ergodic_check, tail_probability
from .model import (Boundary, ModelParams, NumericalError, QueryParams, ValidationError,
                    read_path_csv, validate, write_path_csv, write_triple_csv)
from .simulate import Scheme, SimConfig, simulate, simulate_batch
from .stationary import loss_statistics, stationary_density
from .variational import (Regime, Variant, decay_rate, empirical_decay_rate,
                          gaussian_tail_decay, most_likely_path, rate_functional)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64

_BOUNDARY_NAMES = {"free": Boundary.FREE, "lower": Boundary.LOWER, "double": Boundary.DOUBLE}
_REGIME_BOUNDARY = {Regime.OU: Boundary.FREE, Regime.ROU: Boundary.LOWER,
                    Regime.DROU: Boundary.DOUBLE}
_DOUBLE_ONLY = {"steady-state", "density", "clt-check", "qv-check", "cumulant", "loss-ld"}


# -- configuration -------------------------------------------------------------


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    return data


def _pick(flag, section: dict, key: str, default=None):
    if flag is not None:
        return flag
    return section.get(key, default)


def _boundary(args, cfg_params: dict) -> Boundary:
    if args.boundary is not None:
        return _BOUNDARY_NAMES[args.boundary]
    if getattr(args, "regime", None) is not None:
        return _REGIME_BOUNDARY[Regime(args.regime)]
    if args.command in _DOUBLE_ONLY:
        return Boundary.DOUBLE
    if "boundary" in cfg_params:
        raw = cfg_params["boundary"]
        return Boundary(raw if isinstance(raw, str) else raw["kind"])
    return Boundary.DOUBLE if args.d is not None else Boundary.FREE


def build_params(args, config: dict) -> ModelParams:
    p = dict(config.get("params", {}))
    raw_b = p.get("boundary")
    cfg_d = raw_b.get("d") if isinstance(raw_b, dict) else p.get("d")
    boundary = _boundary(args, p)
    d = _pick(args.d, {"d": cfg_d}, "d")
    missing = [k for k in ("alpha", "gamma", "sigma") if getattr(args, k) is None and k not in p]
    if missing:
        raise ValidationError(f"missing model parameter(s): {', '.join(missing)}")
    params = ModelParams(
        alpha=float(_pick(args.alpha, p, "alpha")),
        gamma=float(_pick(args.gamma, p, "gamma")),
        sigma=float(_pick(args.sigma, p, "sigma")),
        epsilon=float(_pick(args.epsilon, p, "epsilon", 1.0)),
        boundary=boundary,
        x0=float(_pick(args.x0, p, "x0", 0.0)),
        d=None if d is None or boundary is not Boundary.DOUBLE else float(d),
    )
    return validate(params)


def build_sim(args, config: dict, default_T: float = 1.0) -> SimConfig:
    s = config.get("sim", {})
    q = config.get("query", {})
    T = _pick(args.T, s, "horizon_T", q.get("horizon_T", default_T))
    return SimConfig(dt=float(_pick(args.dt, s, "dt", 1e-3)), horizon_T=float(T),
                     seed=int(_pick(args.seed, s, "seed", 0)),
                     scheme=Scheme(_pick(args.scheme, s, "scheme", "projection")))


def build_query(args, config: dict) -> QueryParams:
    q = config.get("query", {})
    T = _pick(args.T, q, "horizon_T")
    b = _pick(args.b, q, "level_b")
    if T is None or b is None:
        raise ValidationError("this command needs --T and --b")
    a = _pick(getattr(args, "a", None), q, "level_a")
    return QueryParams(float(T), float(b), None if a is None else float(a))


def _option(args, config: dict, name: str, default=None):
    return _pick(getattr(args, name, None), config.get("options", {}), name, default)


# -- output --------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def emit_json(payload: dict, stream) -> None:
    body = dict(payload, schema_version=SCHEMA_VERSION)
    stream.write(json.dumps(_clean(body), sort_keys=True, indent=2, allow_nan=False) + "\n")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _csv(rows_header: tuple[str, ...], columns, out: str | None, stream) -> None:
    fh = open(out, "w", newline="") if out else stream
    try:
        fh.write(",".join(rows_header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    finally:
        if out:
            fh.close()


# -- commands ------------------------------------------------------------------


def cmd_decay_rate(args, config, out) -> None:
    params = build_params(args, config)
    q = build_query(args, config)
    regime = Regime(args.regime) if args.regime else Regime.of(params.boundary)
    report = decay_rate(params, q.horizon_T, q.level_b, regime)
    emit_json({"command": "decay-rate", "params": params.to_dict(), **report.to_dict()}, out)
    _note(f"decay rate {report.rate:.12g} ({regime.value}, x(T)={report.x_T:.6g})")


def cmd_mlp(args, config, out) -> None:
    params = build_params(args, config)
    q = build_query(args, config)
    mlp = most_likely_path(params, q.horizon_T, q.level_b)
    path = mlp.sample(float(_pick(args.dt, config.get("sim", {}), "dt", 1e-3)))
    if args.out:
        write_path_csv(args.out, path)
        emit_json({"command": "mlp", "C": mlp.C, "a": mlp.a, "T": mlp.T, "cost": mlp.cost,
                   "out": args.out}, out)
    else:
        write_path_csv(out, path)
    _note(f"most likely path: {path.n + 1} samples, cost {mlp.cost:.12g}")


def cmd_rate_functional(args, config, out) -> None:
    params = build_params(args, config)
    variant = Variant(_option(args, config, "variant", "I"))
    src = _option(args, config, "path")
    if src is not None:
        path = read_path_csv(src)
        origin = str(src)
    else:
        q = build_query(args, config)
        dt = float(_pick(args.dt, config.get("sim", {}), "dt", 1e-4))
        path = most_likely_path(params, q.horizon_T, q.level_b).sample(dt)
        origin = "most-likely-path"
    value = rate_functional(path, params, variant)
    emit_json({"command": "rate-functional", "variant": variant.value, "value": value,
               "path": origin, "n_steps": path.n, "dt": path.dt}, out)
    _note(f"rate functional {variant.value} = {value:.12g}")


def cmd_simulate(args, config, out) -> None:
    params = build_params(args, config)
    sim = build_sim(args, config)
    reps = int(_option(args, config, "reps", 1))
    if reps > 1:
        batch = simulate_batch(params, sim, reps)
        T = batch.T
        emit_json({"command": "simulate", "reps": reps, "sim": sim.to_dict(),
                   "realized_T": T,
                   "mean_state": float(np.mean(batch.state)),
                   "mean_lower_rate": float(np.mean(batch.lower)) / T,
                   "mean_upper_rate": float(np.mean(batch.upper)) / T}, out)
        _note(f"simulated {reps} replications to T={T:g}")
        return
    result = simulate(params, sim)
    writer = write_path_csv if params.boundary is Boundary.FREE else write_triple_csv
    if args.out:
        writer(args.out, result)
        state = result if params.boundary is Boundary.FREE else result.state
        payload = {"command": "simulate", "sim": sim.to_dict(), "out": args.out,
                   "n_steps": state.n, "terminal_state": float(state.values[-1])}
        if params.boundary is not Boundary.FREE:
            payload["terminal_lower"] = float(result.lower.values[-1])
            payload["terminal_upper"] = float(result.upper.values[-1])
        emit_json(payload, out)
    else:
        writer(out, result)
    _note(f"simulated {sim.n_steps} steps (dt={sim.dt:g}, scheme={sim.scheme.value})")


def cmd_tail(args, config, out) -> None:
    params = build_params(args, config)
    q = build_query(args, config)
    sim = build_sim(args, config, q.horizon_T)
    reps = int(_option(args, config, "reps", 10000))
    est = tail_probability(params, sim, q.horizon_T, q.level_b, reps)
    emit_json({"command": "tail", "T": q.horizon_T, "b": q.level_b, "sim": sim.to_dict(),
               **est.to_dict()}, out)
    _note(f"P(state_T >= {q.level_b:g}) ~ {est.p_hat:.6g} [{est.ci_low:.6g}, {est.ci_high:.6g}]")


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"expected a comma-separated list of numbers, got {text!r}") from None


def cmd_empirical_decay(args, config, out) -> None:
    params = build_params(args, config)
    q = build_query(args, config)
    sim = build_sim(args, config, q.horizon_T)
    eps = _float_list(_option(args, config, "eps_grid", "0.5,0.2,0.1"))
    reps = int(_option(args, config, "reps", 10000))
    points = empirical_decay_rate(params, q.horizon_T, q.level_b, eps, reps, dt=sim.dt,
                                  seed=sim.seed, scheme=sim.scheme)
    payload = {"command": "empirical-decay", "T": q.horizon_T, "b": q.level_b,
               "sim": sim.to_dict(), "points": [p.to_dict() for p in points]}
    if params.boundary is Boundary.FREE:
        payload["gaussian"] = [{"epsilon": e, "value": v}
                               for e, v in gaussian_tail_decay(params, q.horizon_T, q.level_b, eps)]
    emit_json(payload, out)
    _note("eps log p: " + ", ".join(f"{p.epsilon:g}: {p.value:.5g}" for p in points))


def cmd_steady_state(args, config, out) -> None:
    params = build_params(args, config)
    stats = loss_statistics(params)
    emit_json({"command": "steady-state", "params": params.to_dict(), **stats.to_dict()}, out)
    _note(f"q_U={stats.q_upper:.12g} q_L={stats.q_lower:.12g} "
          f"eta2_U={stats.eta2_upper:.12g} eta2_L={stats.eta2_lower:.12g}")


def cmd_density(args, config, out) -> None:
    params = build_params(args, config)
    n = int(_option(args, config, "grid_points", 201))
    if n < 2:
        raise ValidationError("grid_points must be >= 2")
    x = np.linspace(0.0, float(params.d), n)
    _csv(("x", "pi"), (x, stationary_density(params, x)), args.out, out)


def cmd_clt_check(args, config, out) -> None:
    params = build_params(args, config)
    sim = build_sim(args, config, 1e4)
    reps = int(_option(args, config, "reps", 500))
    which = _option(args, config, "which", "both")
    stats = loss_statistics(params)
    batch = simulate_batch(params, sim, reps)
    kinds = list(Which) if which == "both" else [Which(which)]
    reports = [clt_from_batch(batch, stats, w) for w in kinds]
    emit_json({"command": "clt-check", "sim": sim.to_dict(),
               "reports": [r.to_dict() for r in reports]}, out)
    if args.out:
        _csv(tuple(r.which.value for r in reports),
             [r.normalized_samples for r in reports], args.out, out)
    for r in reports:
        _note(f"{r.which.value}: var {r.sample_var:.6g} vs eta2 {r.target_var:.6g}, "
              f"KS {r.ks_distance:.4f}")


def cmd_qv_check(args, config, out) -> None:
    params = build_params(args, config)
    sim = build_sim(args, config, 1e4)
    lhs, rhs = qv_ergodic_check(params, sim)
    emit_json({"command": "qv-check", "sim": sim.to_dict(), "lhs": lhs, "rhs": rhs,
               "relative_error": abs(lhs - rhs) / rhs}, out)
    _note(f"time average {lhs:.8g} vs eta2_U {rhs:.8g}")


def cmd_cumulant(args, config, out) -> None:
    params = build_params(args, config)
    lo = float(_option(args, config, "theta_min", -0.5))
    hi = float(_option(args, config, "theta_max", 2.0))
    n = int(_option(args, config, "theta_points", 41))
    if n < 2 or not hi > lo:
        raise ValidationError("need theta_max > theta_min and theta_points >= 2")
    curve = cumulant_curve(params, np.linspace(lo, hi, n))
    _csv(("theta", "psi"), (curve.theta_grid, curve.psi_values), args.out, out)


def cmd_loss_ld(args, config, out) -> None:
    params = build_params(args, config)
    c = _option(args, config, "c")
    if c is None:
        raise ValidationError("loss-ld needs --c")
    res = loss_ld(params, float(c))
    emit_json({"command": "loss-ld", **res.to_dict()}, out)
    _note(f"rate {res.rate:.12g} at theta {res.argmax_theta:.8g}")


COMMANDS: dict[str, tuple[Callable, str]] = {
    "decay-rate": (cmd_decay_rate, "small-noise decay rate of P(X_T >= b)"),
    "mlp": (cmd_mlp, "most likely path as CSV"),
    "rate-functional": (cmd_rate_functional, "action of a CSV path (default: the most likely path)"),
    "simulate": (cmd_simulate, "simulate one path (CSV) or a batch (JSON summary)"),
    "tail": (cmd_tail, "Monte Carlo P(state_T >= b) with a Clopper-Pearson interval"),
    "empirical-decay": (cmd_empirical_decay, "Monte Carlo eps log P(X_T >= b) over an eps grid"),
    "steady-state": (cmd_steady_state, "loss/idleness rates and CLT variances"),
    "density": (cmd_density, "stationary density on a grid as CSV"),
    "clt-check": (cmd_clt_check, "CLT statistics of U and L over replications"),
    "qv-check": (cmd_qv_check, "ergodic average of sigma^2 h'(Z)^2 vs eta_U^2"),
    "cumulant": (cmd_cumulant, "limiting cumulant psi(theta) on a grid as CSV"),
    "loss-ld": (cmd_loss_ld, "large-deviation rate of P(U_t > c t)"),
}


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    for name in ("alpha", "gamma", "sigma", "epsilon", "x0", "d"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--boundary", choices=sorted(_BOUNDARY_NAMES))
    s = p.add_argument_group("simulation and query")
    s.add_argument("--T", type=float, help="horizon")
    s.add_argument("--b", type=float, help="target level")
    s.add_argument("--a", type=float, help="optional lower level")
    s.add_argument("--dt", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--scheme", choices=[sc.value for sc in Scheme])
    p.add_argument("--config", help="JSON file; flags override its values")
    p.add_argument("--out", help="path for CSV artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rou-limits",
                                     description="Limit theorems for reflected OU processes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        _add_common(p)
        if name == "decay-rate":
            p.add_argument("--regime", choices=[r.value for r in Regime])
        if name == "rate-functional":
            p.add_argument("--variant", choices=[v.value for v in Variant])
            p.add_argument("--path", help="CSV path with header t,value")
        if name in ("simulate", "tail", "empirical-decay", "clt-check"):
            p.add_argument("--reps", type=int)
        if name == "empirical-decay":
            p.add_argument("--eps-grid", dest="eps_grid", help="comma-separated, decreasing")
        if name == "density":
            p.add_argument("--grid-points", dest="grid_points", type=int)
        if name == "clt-check":
            p.add_argument("--which", choices=["upper", "lower", "both"])
        if name == "cumulant":
            p.add_argument("--theta-min", dest="theta_min", type=float)
            p.add_argument("--theta-max", dest="theta_max", type=float)
            p.add_argument("--theta-points", dest="theta_points", type=int)
        if name == "loss-ld":
            p.add_argument("--c", type=float)
    return parser


def main(argv: list[str] | None = None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if stdout is None else stdout
    parser = build_parser()
    first = next((a for a in argv if not a.startswith("-")), None)
    if first not in COMMANDS and not any(a in ("-h", "--help", "--version") for a in argv):
        if first is not None:
            print(f"rou-limits: unknown command {first!r}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load_config(args.config)
        COMMANDS[args.command][0](args, config, out)
    except (ValueError, KeyError, TypeError) as exc:
        # ValidationError included; bad enum names or config types land here too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
