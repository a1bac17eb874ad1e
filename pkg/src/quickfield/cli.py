"""Command-line entry point.

Exit statuses: 0 success, 2 usage or scenario error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import experiment, render
from .dynamics import ModelParams, advance, init_state
from .fields import compute_s_dyn, compute_static, single_source_grid
from .geometry import ExitVariant, ParseError, ValidationError, build_rimea11, read_scenario

log = logging.getLogger("quickfield")

SEED_ENV = "QUICKFIELD_SEED"
EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


class UsageError(Exception):
    pass


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {text}")
    return v


def _sadd_value(text):
    v = float(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"s_add must be >= 1, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return v


def _sadd_list(text):
    items = [t for t in text.split(",") if t.strip()]
    return [_sadd_value(t) for t in items]


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quickfield",
        description="Dynamic distance potential field evacuation runs (RiMEA test case 11).")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    where = common.add_mutually_exclusive_group()
    where.add_argument("--variant", type=int, choices=[1, 2, 3], default=2,
                       help="built-in RiMEA 11 exit geometry (default 2)")
    where.add_argument("--scenario", type=Path, help="scenario file instead of a built-in variant")
    common.add_argument("--out-dir", type=Path, default=Path("out"))

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--k-s", type=_nonneg_float, default=1.0)
    model.add_argument("--k-sdyn", type=_nonneg_float, default=1.0)
    model.add_argument("--seed", type=int, default=None,
                       help=f"base seed (default ${SEED_ENV} or 0)")
    model.add_argument("--max-time", type=_nonneg_int, default=3600)

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("--runs", type=_positive_int, default=experiment.DEFAULT_RUNS)
    batch.add_argument("--full-runs", action="store_true",
                       help=f"use {experiment.FULL_RUNS} runs per batch")
    batch.add_argument("--jobs", type=_positive_int, default=experiment.default_jobs())

    p = sub.add_parser("run", parents=[common, model, batch], help="one Monte-Carlo batch")
    p.add_argument("--s-add", type=_sadd_value, default=10.0)
    p.add_argument("--trace", action="store_true", help="also write the first run's agent trace")

    p = sub.add_parser("sweep", parents=[common, model, batch], help="batches over s_add values")
    p.add_argument("--s-add", type=_sadd_list, default=[1.0, 2.0, 5.0, 10.0],
                   help="comma-separated list (default 1,2,5,10)")

    p = sub.add_parser("snapshot", parents=[common, model], help="crowd image at a given time")
    p.add_argument("--s-add", type=_sadd_value, default=10.0)
    p.add_argument("--at", type=_nonneg_int, default=100, help="seconds (default 100)")
    p.add_argument("--scale", type=_positive_int, default=1)

    p = sub.add_parser("render-fields", parents=[common], help="static and metric field images")
    p.add_argument("--size", type=_positive_int, default=None,
                   help="use an empty SIZE x SIZE grid with a central source instead")
    p.add_argument("--scale", type=_positive_int, default=1)

    sub.add_parser("validate", parents=[common], help="check scenario invariants")
    return parser


def _scenario(args):
    if args.scenario is not None:
        try:
            return read_scenario(args.scenario)
        except OSError as exc:
            raise UsageError(f"cannot read scenario {args.scenario}: {exc.strerror or exc}")
    return build_rimea11(ExitVariant(args.variant))


def _params(args, s_add):
    return ModelParams(k_S=args.k_s, k_Sdyn=args.k_sdyn, s_add=s_add, max_time=args.max_time)


def _seed(args):
    return _default_seed() if args.seed is None else args.seed


def _write(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        path.write_text(data, encoding="utf-8")
    else:
        path.write_bytes(data)


def _summary(b) -> str:
    m = b.metrics
    ti = "n/a" if m.mean_Ti is None else f"{m.mean_Ti:.1f}"
    return (f"variant={b.scenario.variant} k_Sdyn={b.params.k_Sdyn:g} s_add={b.params.s_add:g} "
            f"runs={m.n_runs} T={m.mean_T:.1f}±{m.sd_T:.1f} T_i={ti} "
            f"right={m.mean_right:.1f}±{m.sd_right:.1f} incomplete={m.incomplete_runs}")


def cmd_run(args) -> int:
    scenario = _scenario(args)
    runs = experiment.FULL_RUNS if args.full_runs else args.runs
    b = experiment.batch(scenario, _params(args, args.s_add), runs, _seed(args), args.jobs,
                         keep_agents=args.trace)
    _write(args.out_dir / "batch.csv", experiment.batch_csv([b]))
    _write(args.out_dir / "runs.csv", experiment.runs_csv(b.runs))
    if args.trace:
        _write(args.out_dir / "trace.csv", experiment.trace_csv(b.runs[0]))
    print(_summary(b))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.s_add:
        raise UsageError("--s-add needs at least one value")
    scenario = _scenario(args)
    runs = experiment.FULL_RUNS if args.full_runs else args.runs
    results = experiment.sadd_sweep(scenario, _params(args, 1.0), args.s_add, runs,
                                    _seed(args), args.jobs)
    _write(args.out_dir / "sweep.csv", experiment.batch_csv(results))
    for b in results:
        print(_summary(b))
    return EXIT_OK


def cmd_snapshot(args) -> int:
    scenario = _scenario(args)
    params = _params(args, args.s_add)
    state = advance(init_state(scenario, params, _seed(args)), until=args.at)
    if state.clock < args.at:
        log.warning("egress finished at t=%d s before --at %d; writing the final state",
                    state.clock, args.at)
    sdyn = compute_s_dyn(scenario.grid, state.occupancy(), state.static_field, params.s_add)
    tag = f"t{args.at}"
    _write(args.out_dir / f"snapshot_{tag}.ppm",
           render.render_snapshot(state, args.scale).to_bytes())
    _write(args.out_dir / f"sdyn_{tag}.pgm",
           render.render_field(sdyn, scenario.grid, scale=args.scale).to_bytes())
    print(f"t={state.clock} active={state.n_active} exited={state.n_exited}")
    return EXIT_OK


def cmd_render_fields(args) -> int:
    if args.size is not None:
        grid = single_source_grid(args.size, args.size, (args.size // 2, args.size // 2))
    else:
        grid = _scenario(args).grid
    _write(args.out_dir / "static.pgm",
           render.render_field(compute_static(grid), grid, scale=args.scale).to_bytes())
    for name, img in render.render_metric_comparison(grid, args.scale).items():
        _write(args.out_dir / f"metric_{name}.pgm", img.to_bytes())
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _scenario(args)
    print(f"ok: {scenario.grid.width}x{scenario.grid.height} grid, "
          f"{len(scenario.start_region)} start cells, {scenario.agent_count} agents, "
          f"{len(scenario.exit_labels)} destination cells")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "snapshot": cmd_snapshot,
            "render-fields": cmd_render_fields, "validate": cmd_validate}


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.INFO)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
