"""Command-line entry point: ``curveflow run | table | validate``."""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, load_config
from .driver import StepFailure, circle_table_config, run
from .io import write_outputs

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DESK_GRID = (20, 40, 80)
DESK_TIME = (2, 4, 8, 16, 32)
FULL_GRID = (5, 10, 20, 40, 80, 160)
FULL_TIME = (2, 4, 8, 16, 32, 64, 128, 256)
STALL_MARK = "–"


def worker_count() -> int:
    """Worker cap from ``CURVEFLOW_THREADS`` (default: all CPUs)."""
    raw = os.environ.get("CURVEFLOW_THREADS")
    n = os.cpu_count() or 1
    if raw:
        try:
            n = max(1, int(raw))
        except ValueError:
            raise ConfigError("CURVEFLOW_THREADS", f"expected an integer, got {raw!r}") from None
    return n


def table_cell(args):
    """Error of one disk run, or ``None`` when the interface stalls."""
    from .validation import circle_error

    N, n_t, mode, K = args
    traj = run(circle_table_config(N, n_t, mode, K))
    if traj.stall_step(last=n_t - 1) is not None:
        return None
    return circle_error(traj)


def error_table(mode: str, grids, times, K: int = 10, workers: int = 1) -> dict:
    jobs = [(N, n_t, mode, K) for N in grids for n_t in times]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(table_cell, jobs))
    else:
        vals = [table_cell(j) for j in jobs]
    return {(j[0], j[1]): v for j, v in zip(jobs, vals)}


def format_table(table: dict, grids, times) -> str:
    head = "res(space\\time)".ljust(16) + "".join(f"{t:>9d}" for t in times)
    lines = [head]
    for N in grids:
        cells = []
        for t in times:
            v = table[(N, t)]
            cells.append(f"{STALL_MARK:>9}" if v is None else f"{v:9.4f}")
        lines.append(f"{N} x {N}".ljust(16) + "".join(cells))
    return "\n".join(lines)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or os.path.join("runs", cfg.name)
    try:
        traj = run(cfg)
    except StepFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_outputs(traj, out, svg=args.svg)
    drift = traj.drift()
    print(f"{cfg.name}: {traj.n_steps} steps, {len(traj.frames)} frames, max drift {drift.max():.3e}, "
          f"{traj.wall_time:.1f} s -> {out}")
    return EXIT_OK


def cmd_table(args) -> int:
    grids, times = (FULL_GRID, FULL_TIME) if args.full else (DESK_GRID, DESK_TIME)
    t0 = time.perf_counter()
    table = error_table(args.mode, grids, times, K=args.K, workers=worker_count())
    print(f"time-averaged radius error, {args.mode}, K={args.K} ({STALL_MARK} = stalled)")
    print(format_table(table, grids, times))
    print(f"wall clock {time.perf_counter() - t0:.1f} s")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_checks

    def emit(res):
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}", flush=True)

    results = run_checks(args.filter, fault=args.inject_fault, emit=emit)
    if not results:
        print(f"no check matches {args.filter!r}", file=sys.stderr)
        return EXIT_USAGE
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curveflow", description="Thresholding simulator for curvature-driven "
                                "multiphase interface motion with area constraints.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configuration file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default runs/<name>)")
    r.add_argument("--svg", action="store_true", help="write one SVG per geometry frame")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("table", help="shrinking-disk error table")
    t.add_argument("--mode", choices=("bmo", "bmo_star"), required=True)
    t.add_argument("--full", action="store_true", help="full 5..160 x 2..256 sweep")
    t.add_argument("--K", type=int, default=10, help="inner steps per outer step")
    t.set_defaults(func=cmd_table)

    v = sub.add_parser("validate", help="oracle cross-checks")
    v.add_argument("--filter", help="run only checks whose name contains this text")
    v.add_argument("--inject-fault", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
