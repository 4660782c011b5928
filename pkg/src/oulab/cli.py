"""Batch driver: ``oulab <command> --config run.ini [--out DIR] [--seed N]``.

Commands and artifacts (all floats written with 17 significant digits, JSON
keys sorted, so reruns are byte-identical):

    simulate           u_0000.ougs ... (OUGS1 snapshots), norms.csv
    constants          constants.json (c1, c2, c, kappa and the Q_t lower-bound check)
    verify-convexity   convexity.csv (member, t, norm, ratio), convexity.json
    thickness          thickness.json
    observability      observability.csv, observability.json
    reconstruct        estimate.ougs, reconstruct.json
    sweep              curve.csv (obs_norm,true_norm,recon_error,bound), fit.json

Exit codes: 0 success, 2 configuration error, 3 numerical guard
(truncation, convergence, degenerate or out-of-regime input), 4 solver
failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .ensembles import gaussian, gaussian_mixture, mixture_ensemble, standard_ensemble
from .errors import (
    ConvergenceError,
    DegenerateCaseError,
    DomainTruncationError,
    InvalidInputError,
    OutOfRegimeError,
    SolverFailureError,
)
from .field import GridState, graph_norm, l2_norm, load_state, save_state
from .geometry import thickness_check
from .inverse import (
    add_noise,
    log_convexity_verify,
    observability_ratio,
    observe,
    reconstruct_detailed,
    stability_sweep,
)
from .linops import convexity_constants, verify_qt_lower_bound
from .semigroup import trajectory

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_SOLVER = 0, 2, 3, 4


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _encode(obj) -> str:
    # json.dumps writes shortest-repr floats; this writes %.17g for every float
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_encode(obj) + "\n")


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for r in rows:
        lines.append(",".join(str(v) if isinstance(v, (int, np.integer)) else fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n")


def _initial_state(cfg: ExperimentConfig) -> GridState:
    init = cfg.initial or {"kind": "gaussian", "center": None, "width": 1.0, "amplitude": 1.0}
    if init["kind"] == "file":
        u0 = load_state(init["file"])
        if u0.spec != cfg.grid:
            raise ConfigError(f"state file grid {u0.spec} differs from [grid]", cfg.source,
                              cfg._lines.get(("initial", "file")), "initial", "file")
        return u0
    if init["kind"] == "mixture":
        return gaussian_mixture(cfg.grid, init["centers"], init["widths"], init["amplitudes"])
    return gaussian(cfg.grid, init["center"], init["width"], init["amplitude"])


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("grid", "drift", "theta")
    u0 = _initial_state(cfg)
    states = trajectory(u0, cfg.drift, cfg.theta, cfg.k)
    times = cfg.theta * np.arange(cfg.k + 1) / cfg.k
    rows = []
    for i, (t, u) in enumerate(zip(times, states)):
        save_state(out / f"u_{i:04d}.ougs", u)
        rows.append((i, t, l2_norm(u)))
    write_csv(out / "norms.csv", "i,t,norm", rows)
    return {"snapshots": len(states), "final_norm": rows[-1][2]}


def cmd_constants(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("drift", "theta")
    c = cfg.convexity
    const = convexity_constants(cfg.drift, cfg.theta, n_times=c["n_times"],
                                n_directions=c["n_directions"])
    check = verify_qt_lower_bound(cfg.drift, cfg.theta, const)
    report = {"constants": const.as_dict(), "qt_lower_bound": check.as_dict()}
    write_json(out / "constants.json", report)
    return {"c": const.c, "kappa": const.kappa}


def cmd_verify_convexity(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("grid", "drift", "theta")
    c = cfg.convexity
    const = convexity_constants(cfg.drift, cfg.theta, n_times=c["n_times"],
                                n_directions=c["n_directions"])
    members = [_initial_state(cfg)] if cfg.initial else mixture_ensemble(cfg.grid, c["ensemble"], cfg.seed)
    rows, maxima = [], []
    for m, u0 in enumerate(members):
        rep = log_convexity_verify(u0, cfg.drift, const, k=cfg.k, route=c["route"])
        rows.extend((m, t, n, r) for t, n, r in rep.rows())
        maxima.append(rep.max_ratio)
    write_csv(out / "convexity.csv", "member,t,norm,ratio", rows)
    summary = {"max_ratio": max(maxima), "passed": bool(max(maxima) <= 1.0 + 1e-4),
               "kappa": const.kappa, "c": const.c, "members": len(members), "route": c["route"],
               "member_max_ratios": maxima}
    write_json(out / "convexity.json", summary)
    return {"max_ratio": summary["max_ratio"], "passed": summary["passed"]}


def cmd_thickness(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("omega", "window")
    rep = thickness_check(cfg.omega, cfg.window, cfg.resolution)
    write_json(out / "thickness.json", rep.as_dict())
    return {"passed": rep.passed, "min_ratio": rep.min_ratio}


def cmd_observability(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("grid", "drift", "theta", "omega")
    ens = standard_ensemble(cfg.grid, cfg.observability_ensemble, cfg.seed)
    rep = observability_ratio(ens, cfg.drift, cfg.omega, cfg.theta, cfg.k)
    write_csv(out / "observability.csv", "member,ratio", list(enumerate(rep.ratios)))
    write_json(out / "observability.json", rep.as_dict())
    return {"max_ratio": rep.max_ratio}


def cmd_reconstruct(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("grid", "drift", "theta", "omega")
    u0 = _initial_state(cfg)
    rec = observe(u0, cfg.drift, cfg.omega, cfg.theta, cfg.k)
    sigma = cfg.noise_levels[0] if cfg.noise_levels else 0.0
    if sigma > 0:
        rec = add_noise(rec, sigma, np.random.default_rng([cfg.seed, 0, 0]))
    res = reconstruct_detailed(rec, cfg.drift, cfg.alpha, iters=cfg.iters)
    save_state(out / "estimate.ougs", res.estimate)
    err = l2_norm(res.estimate - u0)
    report = {"alpha": cfg.alpha, "noise": sigma, "iterations": res.iterations,
              "relative_residual": res.relative_residual, "error": err,
              "relative_error": err / l2_norm(u0), "true_norm": l2_norm(u0),
              "estimate_shell_fraction": res.shell_fraction}
    write_json(out / "reconstruct.json", report)
    return {"relative_error": report["relative_error"]}


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> dict:
    cfg.require("grid", "drift", "theta", "omega", "noise_levels")
    u0 = _initial_state(cfg)
    R = cfg.admissible.R if cfg.admissible is not None else None
    curve = stability_sweep(u0, cfg.drift, cfg.omega, cfg.theta, cfg.noise_levels, reps=cfg.reps,
                            R=R, k=cfg.k, seed=cfg.seed)
    (out / "curve.csv").write_text(curve.to_csv())
    fit = dict(curve.fit)
    fit.update({"graph_norm": graph_norm(u0, cfg.drift), "R": R, "noise_levels": cfg.noise_levels,
                "reps": cfg.reps, "seed": cfg.seed})
    write_json(out / "fit.json", fit)
    return {"coverage": fit["coverage"], "C": fit["C"], "C1": fit["C1"]}


COMMANDS = {
    "simulate": cmd_simulate,
    "constants": cmd_constants,
    "verify-convexity": cmd_verify_convexity,
    "thickness": cmd_thickness,
    "observability": cmd_observability,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oulab", description="Ornstein-Uhlenbeck inverse-problem experiments")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="INI experiment file")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides [run] output)")
        p.add_argument("--seed", type=int, default=None, help="seed (overrides [run] seed)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed must be >= 0, got {args.seed}", "command line")
            cfg.seed = args.seed
        out = args.out or cfg.output or Path("oulab-out")
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, out)
    except (ConfigError, InvalidInputError) as exc:
        print(f"oulab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainTruncationError, ConvergenceError, DegenerateCaseError, OutOfRegimeError) as exc:
        print(f"oulab: numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except SolverFailureError as exc:
        print(f"oulab: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"{args.command}: " + ", ".join(f"{k}={_encode(v)}" for k, v in summary.items()))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
