"""Command-line entry point: ``stagwave {trivial,dispersion,bifurcate,continue,render}``.

Exit codes: 0 success, 2 kernel/transversality validation failure,
3 Newton failure, 4 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import dispersion
from ..continuation import ContinuationSettings, continue_branch, validate_bifurcation
from ..errors import (BifurcationValidationError, ConfigError, DomainError, NewtonFailure,
                      ParameterError)
from ..trivial_flow import FlowParameters, solve_trivial
from . import formats
from .fields import pressure, unflatten
from .stagnation import critical_layer_levels, stagnation_points, streamlines

EXIT_OK, EXIT_VALIDATION, EXIT_NEWTON, EXIT_CONFIG = 0, 2, 3, 4

log = logging.getLogger("stagwave")


def _config(args) -> formats.RunConfig:
    cfg = formats.load_config(args.config)
    if getattr(args, "mu", None) is not None:
        cfg.mu = args.mu
    if getattr(args, "lam", None) is not None:
        if args.lam == 0:
            raise ConfigError("--lambda must be nonzero")
        cfg.lam = args.lam
    if getattr(args, "kappa", None) is not None:
        cfg.kappa = args.kappa
    if getattr(args, "mode", None) is not None:
        cfg.mode_n = args.mode
    return cfg


def _resolve_lambda(cfg: formats.RunConfig) -> float:
    if cfg.lam is not None:
        return cfg.lam
    roots = dispersion.find_bifurcation_lambda(cfg.vorticity, cfg.mu, cfg.kappa, cfg.mode_n)
    pick = [r for r in roots if (r > 0) == (cfg.root == "positive")]
    if not pick:
        raise BifurcationValidationError(
            f"no {cfg.root} bifurcation point for mode {cfg.mode_n}")
    return min(pick, key=abs)


def _out(path, default: str) -> Path:
    p = Path(path or default)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, default=float)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_trivial(args) -> int:
    cfg = _config(args)
    flow = solve_trivial(cfg.vorticity, FlowParameters(cfg.mu, _resolve_lambda(cfg)))
    path = formats.write_trivial_csv(_out(args.out, "trivial.csv"), flow, args.points)
    _emit({"Q": flow.Q, "Upsilon": flow.Upsilon, "wronskian_defect": flow.wronskian_defect,
           "csv": str(path)})
    return EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = _config(args)
    flow = solve_trivial(cfg.vorticity, FlowParameters(cfg.mu, _resolve_lambda(cfg)))
    report = dispersion.kernel_set(flow, cfg.kappa)
    zs = np.linspace(args.z_min, args.z_max, args.z_count)
    rows = []
    for z in zs:
        l_value = dispersion.eval_l(flow, z)
        rows.append([z, l_value if not dispersion.is_pole(l_value) else "pole",
                     dispersion.prufer_angle(flow, z)])
    csv_path = formats.write_csv(_out(args.out_csv, "dispersion.csv"),
                                 ["z", "l", "theta"], rows)
    out = report.to_dict()
    out["r"] = dispersion.eval_r(flow.model, flow.params)
    out["csv"] = str(csv_path)
    _emit(out, args.out)
    return EXIT_OK


def cmd_bifurcate(args) -> int:
    cfg = _config(args)
    search = dispersion.find_bifurcation_lambda(cfg.vorticity, cfg.mu, cfg.kappa, cfg.mode_n,
                                                details=True)
    parameter = args.parameter
    points = []
    valid = []
    for lam in search.roots:
        flow = solve_trivial(cfg.vorticity, FlowParameters(cfg.mu, lam))
        rep = dispersion.kernel_set(flow, cfg.kappa)
        rec = rep.modes[cfg.mode_n]
        ok = rep.M == [cfg.mode_n] and bool(
            rec.transversal if parameter == "mu" else rec.transversal_lambda)
        valid.append(ok)
        points.append({"lambda": lam, "M": rep.M, "l_mu": rec.l_mu, "r_mu": rec.r_mu,
                       "transversal_mu": rec.transversal,
                       "l_lambda": rec.l_lambda, "r_lambda": rec.r_lambda,
                       "transversal_lambda": rec.transversal_lambda, "valid": ok})
    _emit({"mu": cfg.mu, "kappa": cfg.kappa, "n": cfg.mode_n, "parameter": parameter,
           "diagnostic": search.diagnostic, "dropped": search.dropped,
           "bifurcation_points": points}, args.out)
    return EXIT_OK if any(valid) else EXIT_VALIDATION


def _settings(cfg, args) -> ContinuationSettings:
    data = dict(cfg.continuation)
    if args.steps is not None:
        data["max_steps"] = args.steps
    if args.parameter is not None:
        data["parameter"] = args.parameter
    if args.direction is not None:
        data["direction"] = args.direction
    try:
        return ContinuationSettings.from_dict(data)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"bad continuation settings: {exc}") from exc


def cmd_continue(args) -> int:
    cfg = _config(args)
    settings = _settings(cfg, args)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    log_path = outdir / "branch.csv"
    if args.resume:
        from ..continuation import BranchPoint, monitor
        state, header = formats.read_snapshot(args.resume)
        if "tangent" not in header:
            raise ConfigError("snapshot has no tangent; cannot resume")
        start = BranchPoint(t=float(header.get("t", 0.0)), state=state, mu=state.flow.mu,
                            residual_norm=float(header.get("residual_norm", 0.0)),
                            monitors=monitor(state))
        n = int(header.get("n", cfg.mode_n))
        kappa = float(header.get("kappa", cfg.kappa))
        settings.parameter = header.get("parameter", settings.parameter)
        branch = continue_branch(state.flow, n, kappa, settings, grid=state.grid, start=start,
                                 tangent=np.asarray(header["tangent"]), validate=False)
        offset = int(header.get("index", 0))
        points = branch.points[1:]
        branch.points = points
        append = log_path.exists()
    else:
        lam = _resolve_lambda(cfg)
        flow = solve_trivial(cfg.vorticity, FlowParameters(cfg.mu, lam))
        validate_bifurcation(flow, cfg.mode_n, cfg.kappa, settings.parameter)
        branch = continue_branch(flow, cfg.mode_n, cfg.kappa, settings,
                                 Nx=cfg.Nx, Ns=cfg.Ns, validate=False)
        offset = 0
        points = branch.points
        append = False
    names = []
    for i, p in enumerate(points):
        idx = offset + i + (1 if args.resume else 0)
        name = f"point_{idx:05d}.snap"
        meta = {"t": p.t, "index": idx, "n": branch.n, "kappa": branch.kappa,
                "parameter": branch.parameter, "residual_norm": p.residual_norm}
        if p.tangent is not None:
            meta["tangent"] = [float(v) for v in p.tangent]
        formats.write_snapshot(outdir / name, p.state, meta)
        names.append(name)
    formats.write_branch_log(log_path, branch, names, append=append)
    _emit({"termination": branch.termination, "points": len(points),
           "events": branch.events, "log": str(log_path)})
    return EXIT_NEWTON if branch.termination == "newton-failure" else EXIT_OK


def cmd_render(args) -> int:
    state, header = formats.read_snapshot(args.snapshot)
    field = unflatten(state)
    pressure(field, state.flow)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    formats.write_field_csv(outdir / "field.csv", field)
    stag = stagnation_points(field)
    levels = list(args.levels or []) or critical_layer_levels(stag)
    if not levels:
        levels = list(np.linspace(state.flow.Upsilon, state.flow.mu, 9)[1:-1])
    cs = streamlines(field, levels, stag)
    formats.write_contours_csv(outdir / "streamlines.csv", cs)
    _emit({
        "stagnation_points": [vars(p) for p in stag.points],
        "events": stag.events,
        "contours": len(cs),
        "closed_contours": len(cs.closed),
        "critical_layers": len(cs.critical_layers),
        "field": str(outdir / "field.csv"),
        "streamlines": str(outdir / "streamlines.csv"),
    }, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stagwave", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", help="run configuration JSON")
            p.add_argument("--mu", type=float)
            p.add_argument("--lambda", dest="lam", type=float)
            p.add_argument("--kappa", type=float)
            p.add_argument("--mode", type=int)
        p.add_argument("--out", help="JSON output path (default: stdout)")

    p = sub.add_parser("trivial", help="dump the trivial flow as CSV")
    common(p)
    p.add_argument("--points", type=int, default=101, help="number of s samples in the CSV")
    p.set_defaults(func=cmd_trivial)

    p = sub.add_parser("dispersion", help="kernel report and l(z) curve")
    common(p)
    p.add_argument("--out-csv")
    p.add_argument("--z-min", type=float, default=-50.0)
    p.add_argument("--z-max", type=float, default=50.0)
    p.add_argument("--z-count", type=int, default=201)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("bifurcate", help="find and validate bifurcation points")
    common(p)
    p.add_argument("--parameter", choices=("mu", "lambda"), default="mu")
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("continue", help="continue a branch from a bifurcation point")
    common(p)
    p.add_argument("--out-dir", default="branch")
    p.add_argument("--resume", help="snapshot to resume from")
    p.add_argument("--steps", type=int)
    p.add_argument("--parameter", choices=("mu", "lambda"))
    p.add_argument("--direction", type=int, choices=(1, -1))
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("render", help="physical fields, stagnation points, streamlines")
    p.add_argument("snapshot")
    p.add_argument("--out-dir", default="render")
    p.add_argument("--levels", type=float, nargs="*")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BifurcationValidationError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NewtonFailure, DomainError) as exc:
        print(f"newton failure: {exc}", file=sys.stderr)
        return EXIT_NEWTON


if __name__ == "__main__":
    sys.exit(main())
