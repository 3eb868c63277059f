"""Experiment configuration, the repetition protocol and result files.

A configuration is one JSON object; unknown keys are rejected. Minimal form::

    {"algorithms": ["ga", "rs", "gs"], "master_seed": 42}

Everything else has a default (see ``DEFAULT_CONFIG`` in the README).
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ObjectiveError
from .metrics import (
    BENCHMARK_METHODS,
    Benchmark,
    BoxplotStats,
    MetricsConfig,
    absolute_percentage_error,
    boxplot_stats,
    computational_effort,
    estimate_benchmark,
    mape,
    success_rate,
)
from .objectives import (
    CountingObjective,
    ExternalObjective,
    ExternalObjectiveConfig,
    MemoizingObjective,
    SyntheticObjective,
    SyntheticParams,
)
from .optimizers import GaConfig, GsConfig, RsConfig, RunTrace, run_ga, run_gs, run_rs
from .space import GridSpec, SpaceSpec, grid_points, is_feasible

log = logging.getLogger(__name__)

ALGORITHMS = {"ga": (GaConfig, run_ga), "rs": (RsConfig, run_rs), "gs": (GsConfig, run_gs)}
MEASURES = ("success_rate_pct", "ape_pct", "effort_evals")
SEED_DERIVATION = (
    "rep_seed = int(numpy.random.SeedSequence(entropy=master_seed, "
    "spawn_key=(zlib.crc32(algo_label.encode()), rep)).generate_state(1, numpy.uint64)[0]); "
    "each run uses numpy.random.default_rng(rep_seed)"
)


@dataclass(frozen=True)
class AlgorithmSpec:
    label: str
    name: str
    config: GaConfig | RsConfig | GsConfig


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple[AlgorithmSpec, ...]
    master_seed: int
    space: SpaceSpec = field(default_factory=SpaceSpec)
    objective: SyntheticParams | ExternalObjectiveConfig = field(default_factory=SyntheticParams)
    repetitions: int = 10
    benchmark_method: str = "exhaustive_grid"
    benchmark_cross_check: str | None = None
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    memoize: bool = False
    workers: int = 1
    output_dir: str = "results"

    def make_objective(self):
        if isinstance(self.objective, ExternalObjectiveConfig):
            obj = ExternalObjective(self.objective)
        else:
            obj = SyntheticObjective(self.objective)
        return MemoizingObjective(obj) if self.memoize else obj

    def to_dict(self) -> dict:
        """The resolved document, every default filled in; ``load_config`` accepts it."""
        if isinstance(self.objective, ExternalObjectiveConfig):
            o = self.objective
            objective = {"external": {"command": list(o.command), "timeout_s": o.timeout_s,
                                      "restart_on_crash": o.restart_on_crash}}
        else:
            p = asdict(self.objective)
            p["target"] = list(p["target"])
            objective = {"synthetic": p}
        return {
            "space": {"n": self.space.n, "bound": self.space.bound,
                      "zero_sum_tol": self.space.zero_sum_tol,
                      "grid": {"step": self.space.grid.step, "anchor": self.space.grid.anchor}},
            "objective": objective,
            "algorithms": [{a.name: asdict(a.config)} for a in self.algorithms],
            "repetitions": self.repetitions,
            "master_seed": self.master_seed,
            "benchmark": {"method": self.benchmark_method,
                          "cross_check": self.benchmark_cross_check},
            "metrics": asdict(self.metrics),
            "memoize": self.memoize,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }


# -- config loading ----------------------------------------------------------

def _section(doc, allowed, path, required=()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path or 'config'} must be a JSON object", key=path or None)
    for k in doc:
        if k not in allowed:
            raise ConfigError(f"unknown key {_join(path, k)!r}", key=_join(path, k))
    for k in required:
        if k not in doc:
            raise ConfigError(f"missing required key {_join(path, k)!r}", key=_join(path, k))
    return doc


def _join(path, key):
    return f"{path}.{key}" if path else key


def _build(cls, doc, path, allowed):
    _section(doc, allowed, path)
    try:
        return cls(**doc)
    except ConfigError as e:
        key = _join(path, e.key) if e.key else path
        raise ConfigError(f"{key}: {e}", key=key) from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}", key=path) from None


def _int(value, key, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}", key=key)
    if lo is not None and value < lo:
        raise ConfigError(f"{key} must be >= {lo}, got {value}", key=key)
    return value


def _load_space(doc) -> SpaceSpec:
    _section(doc, {"n", "bound", "zero_sum_tol", "grid"}, "space")
    grid = _build(GridSpec, doc.get("grid", {}), "space.grid", {"step", "anchor"})
    rest = {k: v for k, v in doc.items() if k != "grid"}
    if "n" in rest:
        _int(rest["n"], "space.n", lo=2)
    space = _build(SpaceSpec, rest, "space", {"n", "bound", "zero_sum_tol"})
    return SpaceSpec(space.n, space.bound, space.zero_sum_tol, grid)


def _load_objective(doc, space: SpaceSpec):
    _section(doc, {"synthetic", "external"}, "objective")
    if len(doc) != 1:
        raise ConfigError("objective must name exactly one of 'synthetic' or 'external'",
                          key="objective")
    if "external" in doc:
        ext = dict(doc["external"]) if isinstance(doc["external"], dict) else doc["external"]
        _section(ext, {"command", "timeout_s", "restart_on_crash"}, "objective.external",
                 required=("command",))
        if isinstance(ext["command"], str):
            ext["command"] = [ext["command"]]
        return _build(ExternalObjectiveConfig, ext, "objective.external",
                      {"command", "timeout_s", "restart_on_crash"})
    fields = {"baseline", "weight", "ruggedness", "frequency", "target", "noise_sigma", "noise_seed"}
    params = _build(SyntheticParams, doc["synthetic"] or {}, "objective.synthetic", fields)
    if len(params.target) != space.n or not is_feasible(space, params.target):
        raise ConfigError("objective.synthetic.target must be a feasible vector of length n",
                          key="objective.synthetic.target")
    return params


def _load_algorithms(items) -> tuple[AlgorithmSpec, ...]:
    if not isinstance(items, list) or not items:
        raise ConfigError("algorithms must be a non-empty list", key="algorithms")
    specs, seen = [], {}
    for k, item in enumerate(items):
        path = f"algorithms[{k}]"
        if isinstance(item, str):
            name, opts = item, {}
        elif isinstance(item, dict) and len(item) == 1:
            (name, opts), = item.items()
            opts = opts or {}
        else:
            raise ConfigError(f"{path} must be a name or a one-key object", key=path)
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r} at {path}", key=path)
        cls = ALGORITHMS[name][0]
        cfg = _build(cls, opts, f"{path}.{name}", set(cls.__dataclass_fields__))
        seen[name] = seen.get(name, 0) + 1
        label = name if seen[name] == 1 else f"{name}{seen[name]}"
        specs.append(AlgorithmSpec(label, name, cfg))
    return tuple(specs)


def load_config(document) -> ExperimentConfig:
    """Validate a config document (dict, JSON text, or path) and fill in defaults."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        try:
            document = Path(document).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
    allowed = {"space", "objective", "algorithms", "repetitions", "master_seed", "benchmark",
               "metrics", "memoize", "workers", "output_dir"}
    doc = _section(document, allowed, "", required=("algorithms", "master_seed"))

    space = _load_space(doc.get("space", {}))
    objective = _load_objective(doc.get("objective", {"synthetic": {}}), space)
    algorithms = _load_algorithms(doc["algorithms"])
    seed = _int(doc["master_seed"], "master_seed", lo=0)
    if seed >= 2**64:
        raise ConfigError("master_seed must fit in 64 bits", key="master_seed")

    bench = doc.get("benchmark", {})
    if isinstance(bench, str):
        bench = {"method": bench}
    _section(bench, {"method", "cross_check"}, "benchmark")
    method = bench.get("method", "exhaustive_grid")
    cross = bench.get("cross_check")
    for key, m in (("benchmark.method", method), ("benchmark.cross_check", cross)):
        if m is not None and m not in BENCHMARK_METHODS:
            raise ConfigError(f"{key} must be one of {BENCHMARK_METHODS}, got {m!r}", key=key)
    if "analytic" in (method, cross) and isinstance(objective, ExternalObjectiveConfig):
        raise ConfigError("analytic benchmark needs the synthetic objective", key="benchmark")

    metrics = _build(MetricsConfig, doc.get("metrics", {}), "metrics", {"success_tol", "k"})
    memoize = doc.get("memoize", False)
    if not isinstance(memoize, bool):
        raise ConfigError("memoize must be true or false", key="memoize")
    output_dir = doc.get("output_dir", "results")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string", key="output_dir")

    return ExperimentConfig(
        algorithms=algorithms,
        master_seed=seed,
        space=space,
        objective=objective,
        repetitions=_int(doc.get("repetitions", 10), "repetitions", lo=1),
        benchmark_method=method,
        benchmark_cross_check=cross,
        metrics=metrics,
        memoize=memoize,
        workers=_int(doc.get("workers", 1), "workers", lo=1),
        output_dir=output_dir,
    )


# -- running -----------------------------------------------------------------

def derive_seed(master_seed: int, algo_label: str, rep: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed,
                                spawn_key=(zlib.crc32(algo_label.encode()), rep))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RunOutcome:
    algo: str
    rep: int
    seed: int
    trace: RunTrace | None
    evals_used: int
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.trace is not None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    benchmark: Benchmark
    outcomes: list[RunOutcome]
    metrics_rows: list[dict]
    summary: dict[tuple[str, str], BoxplotStats]
    mape_by_algo: dict[str, float]
    observations: dict
    out_dir: Path | None = None


def _run_one(cfg: ExperimentConfig, spec: AlgorithmSpec, rep: int) -> RunOutcome:
    seed = derive_seed(cfg.master_seed, spec.label, rep)
    obj = CountingObjective(cfg.make_objective(), cap=spec.config.budget)
    try:
        trace = ALGORITHMS[spec.name][1](spec.config, cfg.space, obj, seed, algo=spec.label)
        return RunOutcome(spec.label, rep, seed, trace, obj.eval_count)
    except ObjectiveError as e:
        log.warning("run %s/%d failed: %s", spec.label, rep, e)
        return RunOutcome(spec.label, rep, seed, None, obj.eval_count,
                          f"{type(e).__name__}: {e}")
    finally:
        obj.close()


def run_protocol(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Estimate the reference, run every algorithm x repetition, compute metrics."""
    workers = workers or cfg.workers
    bench_seed = derive_seed(cfg.master_seed, "benchmark", 0)
    bench = estimate_benchmark(cfg.space, cfg.make_objective, cfg.benchmark_method, seed=bench_seed)
    cross = None
    if cfg.benchmark_cross_check:
        cross = estimate_benchmark(cfg.space, cfg.make_objective, cfg.benchmark_cross_check,
                                   seed=bench_seed)

    tasks = [(spec, rep) for spec in cfg.algorithms for rep in range(1, cfg.repetitions + 1)]
    if workers == 1:
        outcomes = [_run_one(cfg, spec, rep) for spec, rep in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda t: _run_one(cfg, *t), tasks))

    tol, k = cfg.metrics.success_tol, cfg.metrics.k
    rows, per_algo = [], {}
    for o in outcomes:
        if not o.ok:
            continue
        eff = computational_effort(o.trace, bench, tol, k)
        row = {
            "algo": o.algo, "rep": o.rep,
            "success_rate_pct": success_rate(o.trace, bench, tol),
            "effort_evals": eff.evals, "effort_censored": eff.censored,
            "best_kwh": o.trace.best_f,
            "ape_pct": absolute_percentage_error(o.trace.best_f, bench),
        }
        rows.append(row)
        per_algo.setdefault(o.algo, []).append(row)

    summary, mapes = {}, {}
    for label, rs in per_algo.items():
        mapes[label] = mape([r["best_kwh"] for r in rs], bench)
        for m in MEASURES:
            summary[(label, m)] = boxplot_stats([r[m] for r in rs])

    observations = _observations(summary, per_algo, bench, cross)
    return ExperimentResult(cfg, bench, outcomes, rows, summary, mapes, observations)


def _observations(summary, per_algo, bench, cross) -> dict:
    """Descriptive comparisons for the report; nothing here is asserted."""
    obs = {}
    if cross is not None:
        obs["benchmark_cross_check"] = {
            "method": cross.source, "y_star": cross.y_star,
            "x_star": [float(c) for c in cross.x_star],
            "agrees_exactly": bool(cross.y_star == bench.y_star),
        }
    stats = {a: summary[(a, "success_rate_pct")] for a in per_algo}
    obs["success_rate_std"] = {a: s.std for a, s in stats.items()}
    obs["success_rate_median"] = {a: s.median for a, s in stats.items()}
    obs["reps_with_zero_success"] = {
        a: sum(r["success_rate_pct"] == 0 for r in rs) for a, rs in per_algo.items()
    }
    if "rs" in stats and "ga" in stats:
        obs["rs_success_std_below_ga"] = bool(stats["rs"].std < stats["ga"].std)
        obs["rs_success_median_above_ga"] = bool(stats["rs"].median > stats["ga"].median)
        obs["ga_best_ape_below_rs"] = bool(
            summary[("ga", "ape_pct")].min < summary[("rs", "ape_pct")].min)
    return obs


# -- writing -----------------------------------------------------------------

def fmt(x) -> str:
    """Shortest decimal text that parses back to the same double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else v if isinstance(v, str) else fmt(v) for v in r])


def write_trace(path: Path, trace: RunTrace, n: int):
    header = ["index", *(f"x{i}" for i in range(1, n + 1)), "f_kwh", "best_so_far_kwh"]
    _write_csv(path, header, ([r.index, *r.x, r.f, r.best_so_far] for r in trace.records))


def write_results(result: ExperimentResult, out_dir) -> Path:
    cfg = result.config
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    n = cfg.space.n
    xs = [f"x{i}" for i in range(1, n + 1)]

    runs = []
    for o in result.outcomes:
        if o.ok:
            runs.append([o.algo, o.rep, o.seed, o.evals_used, o.trace.best_f, *o.trace.best_x,
                         "ok", ""])
            write_trace(out / "traces" / f"{o.algo}_{o.rep}.csv", o.trace, n)
        else:
            runs.append([o.algo, o.rep, o.seed, o.evals_used, None, *([None] * n),
                         "failed", o.error])
    _write_csv(out / "runs.csv",
               ["algo", "rep", "seed", "evals_used", "best_kwh", *xs, "status", "error"], runs)

    mcols = ["algo", "rep", "success_rate_pct", "effort_evals", "effort_censored", "best_kwh",
             "ape_pct"]
    mrows = [[r[c] for c in mcols] + [None] for r in result.metrics_rows]
    for spec in cfg.algorithms:
        if spec.label in result.mape_by_algo:
            mrows.append([spec.label, "all", *([None] * 5), result.mape_by_algo[spec.label]])
    _write_csv(out / "metrics.csv", mcols + ["mape_pct"], mrows)

    srows = []
    for spec in cfg.algorithms:
        for m in MEASURES:
            s = result.summary.get((spec.label, m))
            if s is not None:
                srows.append([spec.label, m, s.min, s.q1, s.median, s.q3, s.max, s.mean, s.std])
    _write_csv(out / "summary.csv",
               ["algo", "measure", "min", "q1", "median", "q3", "max", "mean", "std"], srows)

    for m in MEASURES:
        stats = [(spec.label, result.summary[(spec.label, m)]) for spec in cfg.algorithms
                 if (spec.label, m) in result.summary]
        (out / f"boxplot_{m}.svg").write_text(boxplot_svg(stats, m))

    bench = result.benchmark
    meta = {
        "tool": "shapebench",
        "version": __version__,
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.to_dict(),
        "benchmark": {"method": bench.source, "y_star": bench.y_star,
                      "x_star": [float(c) for c in bench.x_star],
                      "evals_used": bench.evals_used},
        "seed_derivation": SEED_DERIVATION,
        "benchmark_seed": derive_seed(cfg.master_seed, "benchmark", 0),
        "seeds": {f"{o.algo}_{o.rep}": o.seed for o in result.outcomes},
        "planned_evals": {s.label: _planned(s, cfg.space) for s in cfg.algorithms},
        "zero_sum_tolerance": cfg.space.zero_sum_tol,
        "memoize": cfg.memoize,
        "elites_reevaluated": False,
        "observations": result.observations,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, allow_nan=False) + "\n")
    result.out_dir = out
    return out


def _planned(spec: AlgorithmSpec, space: SpaceSpec) -> int:
    if spec.name == "ga":
        return spec.config.planned_evals
    if spec.name == "gs" and spec.config.without_replacement:
        return min(spec.config.budget, len(grid_points(space)))
    return spec.config.budget


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int | None = None) -> ExperimentResult:
    result = run_protocol(cfg, workers)
    write_results(result, out_dir or cfg.output_dir)
    return result


# -- svg ---------------------------------------------------------------------

def boxplot_svg(stats: list[tuple[str, BoxplotStats]], title: str,
                width: int = 480, height: int = 320) -> str:
    """Static box-and-whisker chart: whiskers at min/max, box at Q1..Q3, median line."""
    left, right, top, bottom = 60, 20, 30, 40
    lo = min((s.min for _, s in stats), default=0.0)
    hi = max((s.max for _, s in stats), default=1.0)
    if not hi > lo:
        lo, hi = lo - 1.0, hi + 1.0
    plot_h = height - top - bottom

    def y(v):
        return top + plot_h * (hi - v) / (hi - lo)

    slot = (width - left - right) / max(len(stats), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        parts.append(f'<text x="{left - 4}" y="{y(v) + 4:.1f}" text-anchor="end">{_tick(v)}</text>')
        parts.append(f'<line x1="{left - 3}" y1="{y(v):.1f}" x2="{left}" y2="{y(v):.1f}" stroke="black"/>')
    for i, (label, s) in enumerate(stats):
        cx = left + slot * (i + 0.5)
        bw = min(60.0, slot * 0.5)
        x0, x1 = cx - bw / 2, cx + bw / 2
        parts += [
            f'<line x1="{cx:.1f}" y1="{y(s.max):.1f}" x2="{cx:.1f}" y2="{y(s.q3):.1f}" stroke="black"/>',
            f'<line x1="{cx:.1f}" y1="{y(s.q1):.1f}" x2="{cx:.1f}" y2="{y(s.min):.1f}" stroke="black"/>',
            f'<line x1="{cx - bw / 4:.1f}" y1="{y(s.max):.1f}" x2="{cx + bw / 4:.1f}" y2="{y(s.max):.1f}" stroke="black"/>',
            f'<line x1="{cx - bw / 4:.1f}" y1="{y(s.min):.1f}" x2="{cx + bw / 4:.1f}" y2="{y(s.min):.1f}" stroke="black"/>',
            f'<rect x="{x0:.1f}" y="{y(s.q3):.1f}" width="{bw:.1f}" '
            f'height="{max(y(s.q1) - y(s.q3), 0.5):.1f}" fill="#9ecae1" stroke="black"/>',
            f'<line x1="{x0:.1f}" y1="{y(s.median):.1f}" x2="{x1:.1f}" y2="{y(s.median):.1f}" '
            f'stroke="white" stroke-width="2"/>',
            f'<text x="{cx:.1f}" y="{height - bottom + 16}" text-anchor="middle">{label.upper()}</text>',
        ]
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _tick(v: float) -> str:
    if v == 0 or 1e-3 <= abs(v) < 1e5:
        return f"{v:.4g}"
    return f"{v:.2e}"
