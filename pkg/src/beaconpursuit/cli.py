"""Command-line front end: ``beaconpursuit {run,sweep,equilibrium,verify,embed}``.

Exit status: 0 on success, 1 on singular termination or failed verification,
2 on configuration/usage errors, 3 on I/O failures. Errors are written to
standard error as a one-line JSON object ``{"error": CODE, "message": ...}``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import equilibria as eq
from .config import PRESETS, parse_config, preset_equilibrium
from .errors import BeaconPursuitError, OutputError
from .io import SHAPE_COLUMNS, TRAJECTORY_COLUMNS, fmt, verify_trajectory_csv
from .runner import SWEEP_COLUMNS, SweepSettings, parameter_grid, run, sweep
from .shape import EffectiveShape, embed_shape
from .steering import ControlParams

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _report_error(code: str, message: str) -> None:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, out_dir: str | None, filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, filename), "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {filename} to {out_dir}: {exc}") from exc


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell_text(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _cell_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def _load_config(args):
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OutputError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {}
    for flag, key in (("preset", "preset"), ("t_max", "t_max"), ("dt", "dt"), ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return parse_config(text, overrides)


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    config = _load_config(args)
    summary, _ = run(config, args.out)
    doc = summary.as_dict()
    if args.format == "json":
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        flat = {
            "termination": summary.termination,
            "t_end": summary.t_end,
            "invariants_passed": summary.invariants["passed"],
            "max_frame_error": summary.invariants["max_frame_error"],
            "converged": summary.circling.converged if summary.circling else None,
        }
        flat.update({k: float(v) for k, v in summary.terminal_shape.as_dict().items()})
        sys.stdout.write(_csv_text(list(flat), [flat]))
    if summary.exit_code:
        _report_error("SINGULAR_CONFIGURATION", summary.message)
    return summary.exit_code


def cmd_sweep(args) -> int:
    grid = parameter_grid(args.mu, args.lam, args.a, args.a0)
    settings = SweepSettings(
        simulate=args.simulate, t_max=args.t_max if args.t_max is not None else 200.0,
        dt=args.dt if args.dt is not None else 1e-3, seed=args.seed or 0,
    )
    rows = sweep(grid, settings, jobs=args.jobs)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.out, "sweep.json")
    else:
        _emit(_csv_text(SWEEP_COLUMNS, rows), args.out, "sweep.csv")
    return EXIT_OK


def _params_from_args(args) -> tuple[ControlParams, float | None]:
    if args.config or args.preset:
        cfg = _load_config(args)
        return cfg.params, cfg.initial.rho_1b
    missing = [n for n in ("mu", "lam", "a", "a0") if getattr(args, n) is None]
    if missing:
        raise argparse.ArgumentTypeError("give --preset, --config, or all of --mu --lambda --a --a0")
    return ControlParams.common(args.mu, args.lam, args.a, args.a0), None


def cmd_equilibrium(args) -> int:
    params, rho_1b = _params_from_args(args)
    if args.rho_1b is not None:
        rho_1b = args.rho_1b
    specs = eq.all_equilibria(params, rho_1b)
    existence = eq.existence_table(params)
    if args.format == "json":
        doc = {"params": params.as_dict(), "existence": existence, "equilibria": [s.as_dict() for s in specs]}
        _emit(json.dumps(doc, indent=2) + "\n", args.out, "equilibrium.json")
    else:
        cols = ["kind", "condition_holds", "rho_1b_free"] + list(SHAPE_COLUMNS)
        rows = []
        for s in specs:
            row = {"kind": s.kind, "condition_holds": s.condition_holds, "rho_1b_free": s.rho_1b_free}
            row.update(zip(SHAPE_COLUMNS, (float(v) for v in s.shape.as_array())))
            rows.append(row)
        _emit(_csv_text(cols, rows), args.out, "equilibrium.csv")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        report = verify_trajectory_csv(args.path, args.tol)
    except OSError as exc:
        raise OutputError(f"cannot read {args.path}: {exc}") from exc
    except (ValueError, StopIteration) as exc:
        _report_error("MALFORMED_CSV", str(exc) or "empty file")
        return EXIT_FAILED
    report["path"] = args.path
    if args.format == "json":
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        cols = ["path", "rows", "max_frame_error", "max_unit_speed_error", "tolerance", "passed"]
        sys.stdout.write(_csv_text(cols, [report]))
    if not report["passed"]:
        _report_error("INVARIANT_VIOLATION", f"{args.path}: rows {report['failing_rows']} exceed {args.tol}")
        return EXIT_FAILED
    return EXIT_OK


def cmd_embed(args) -> int:
    if args.shape is not None:
        if len(args.shape) != 8:
            raise argparse.ArgumentTypeError("--shape needs 8 numbers")
        shape = EffectiveShape.from_array(args.shape)
    elif args.preset or args.config:
        cfg = _load_config(args)
        if cfg.initial.kind == "shape":
            shape = cfg.initial.shape
        elif cfg.initial.kind == "preset":
            shape = preset_equilibrium(PRESETS[cfg.initial.preset].kind, cfg.params, cfg.initial.rho_1b).shape
        else:
            raise argparse.ArgumentTypeError("the configuration does not describe a shape")
    else:
        raise argparse.ArgumentTypeError("give --shape or --preset/--config")
    state = embed_shape(shape, args.branch)
    vec = state.as_vector()
    if args.format == "json":
        doc = {
            "shape": shape.as_dict(),
            "branch": args.branch,
            "positions": state.positions.tolist(),
            "frames": state.frames.tolist(),
            "beacon": state.beacon.tolist(),
            "state": vec.tolist(),
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out, "embed.json")
    else:
        cols = TRAJECTORY_COLUMNS[1:25] + ["bx", "by", "bz"]
        _emit(_csv_text(cols, [dict(zip(cols, (float(v) for v in vec)))]), args.out, "embed.csv")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beaconpursuit",
        description="Simulate and analyze two-agent beacon-referenced pursuit (exit codes: 0 ok, "
        "1 singular run or failed verify, 2 configuration/usage error, 3 I/O failure).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="json"):
        p.add_argument("--config", metavar="PATH", help="configuration file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named scenario")
        p.add_argument("--out", metavar="DIR", help="output directory (default: stdout only)")
        p.add_argument("--t-max", dest="t_max", type=float, help="horizon in seconds")
        p.add_argument("--dt", type=float, help="integration step")
        p.add_argument("--seed", type=int, help="seed for randomized/perturbed starts")
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default, help="document format")

    p = sub.add_parser("run", help="integrate one scenario and report")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="classify a parameter grid (optionally simulate)")
    common(p, "csv")
    p.add_argument("--mu", type=_floats, default=[1.0], help="gain values, comma-separated")
    p.add_argument("--lambda", dest="lam", type=_floats, default=[0.25, 0.5, 0.75], help="attention weights")
    p.add_argument("--a", type=_floats, default=[-0.5, 0.5], help="neighbor offsets (write --a=-0.5,0.5)")
    p.add_argument("--a0", type=_floats, default=[-0.2, 0.0, 0.2], help="beacon offsets (write --a0=-0.2,0.2)")
    p.add_argument("--simulate", action="store_true", help="integrate perturbed equilibria per cell")
    p.add_argument("--jobs", type=int, default=os.cpu_count(), help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("equilibrium", help="print closed-form equilibria for given parameters")
    common(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--a0", type=float)
    p.add_argument("--rho-1b", dest="rho_1b", type=float, help="beacon distance for the a0 = 0 family")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("verify", help="re-check frame invariants of a trajectory CSV")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("embed", help="build a configuration realizing a shape")
    common(p)
    p.add_argument("--shape", type=_floats, help="rho,rho_1b,rho_2b,xbar_1,xbar_2,xbar_1b,xbar_2b,xtilde")
    p.add_argument("--branch", choices=("P'", "P''"), default="P'")
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OutputError as exc:
        _report_error(exc.code, str(exc))
        return EXIT_IO
    except BeaconPursuitError as exc:
        _report_error(exc.code, str(exc))
        return EXIT_CONFIG
    except argparse.ArgumentTypeError as exc:
        _report_error("USAGE", str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
