"""Command line entry point.

Exit status: 0 on success, 1 on a configuration or usage error, 2 on a
runtime error. Axis numbers on the command line are 1-based.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, ShapebenchError
from .harness import derive_seed, fmt, load_config, run_experiment
from .landscape import count_local_minima, slice_grid
from .metrics import estimate_benchmark
from .space import is_feasible

log = logging.getLogger("shapebench")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="shapebench", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full experiment and write the result bundle")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
    p.add_argument("--workers", type=int, help="concurrent runs (overrides workers)")

    p = sub.add_parser("benchmark", help="estimate the reference minimum")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=["long-ga", "grid", "analytic"], default="grid")

    p = sub.add_parser("landscape", help="export a two-axis slice of the objective")
    p.add_argument("--config", required=True)
    p.add_argument("--axes", required=True, help="two 1-based axis numbers, e.g. 1,2")
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("--out", help="CSV path (a .json sidecar is written next to it); default stdout")

    p = sub.add_parser("eval", help="evaluate the objective at one vector")
    p.add_argument("--config", required=True)
    p.add_argument("--x", required=True, help='comma-separated components, e.g. "3.2,-1.6,-4.8,3.2"')
    return ap


def _parse_axes(text: str, n: int) -> tuple[int, int]:
    try:
        i, j = (int(t) for t in text.split(","))
    except ValueError:
        raise _UsageError(f"--axes must be two comma-separated integers, got {text!r}") from None
    if i == j:
        raise _UsageError("axes must differ")
    for a in (i, j):
        if not 1 <= a <= n:
            raise _UsageError(f"axis {a} out of range 1..{n}")
    return i - 1, j - 1


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise _UsageError("--seed must be >= 0")
        cfg = replace(cfg, master_seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=max(1, args.workers))
    result = run_experiment(cfg, out_dir=args.out)
    for label, value in result.mape_by_algo.items():
        print(f"{label}: MAPE {value:.4f}%")
    failed = sum(not o.ok for o in result.outcomes)
    if failed:
        print(f"{failed} run(s) failed; see runs.csv", file=sys.stderr)
    print(f"results written to {result.out_dir}")


def _cmd_benchmark(args):
    cfg = load_config(args.config)
    method = {"long-ga": "long_ga", "grid": "exhaustive_grid", "analytic": "analytic"}[args.method]
    bench = estimate_benchmark(cfg.space, cfg.make_objective, method,
                               seed=derive_seed(cfg.master_seed, "benchmark", 0))
    print(f"y_star_kwh: {fmt(bench.y_star)}")
    print("x_star: " + ",".join(fmt(c) for c in bench.x_star))
    print(f"evals: {bench.evals_used}")


def _cmd_landscape(args):
    cfg = load_config(args.config)
    ai, aj = _parse_axes(args.axes, cfg.space.n)
    if args.resolution < 2:
        raise _UsageError("--resolution must be >= 2")
    obj = cfg.make_objective()
    try:
        table = slice_grid(cfg.space, obj, ai, aj, args.resolution)
    finally:
        obj.close()
    minima = count_local_minima(table)
    if args.out:
        path = Path(args.out)
        with open(path, "w", newline="") as fh:
            _write_slice(fh, table)
        sidecar = {"axes": [ai + 1, aj + 1], "fill": table.fill, "resolution": table.resolution,
                   "bound": cfg.space.bound, "local_minima": minima}
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
        print(f"local_minima: {minima}")
    else:
        _write_slice(sys.stdout, table)
        print(f"local_minima: {minima}", file=sys.stderr)


def _write_slice(fh, table):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["xi", "xj", "f_kwh"])
    for u, v, f in table.rows():
        w.writerow([fmt(u), fmt(v), "" if f is None else fmt(f)])


def _cmd_eval(args):
    cfg = load_config(args.config)
    try:
        x = [float(t) for t in args.x.split(",")]
    except ValueError:
        raise _UsageError(f"--x must be comma-separated numbers, got {args.x!r}") from None
    if len(x) != cfg.space.n:
        raise _UsageError(f"--x needs {cfg.space.n} components, got {len(x)}")
    if not is_feasible(cfg.space, x):
        print("warning: vector is outside the feasible region", file=sys.stderr)
    obj = cfg.make_objective()
    try:
        print(fmt(obj.evaluate(x)))
    finally:
        obj.close()


COMMANDS = {"run": _cmd_run, "benchmark": _cmd_benchmark, "landscape": _cmd_landscape,
            "eval": _cmd_eval}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(f"shapebench: error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (_UsageError, ConfigError) as e:
        print(f"shapebench: error: {e}", file=sys.stderr)
        return 1
    except (ShapebenchError, OSError) as e:
        print(f"shapebench: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0
