"""Performance measures over run traces, and estimation of the reference minimum."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, ContractViolation
from .objectives import Objective, SyntheticObjective
from .optimizers import GaConfig, RunTrace, run_ga
from .space import SpaceSpec, grid_points

BENCHMARK_METHODS = ("long_ga", "exhaustive_grid", "analytic")
LONG_GA = GaConfig(init_pop=100, gen_pop=50, num_gen=30, num_elit=2, budget=100 + 30 * 48)


@dataclass(frozen=True)
class Benchmark:
    y_star: float
    x_star: np.ndarray
    source: str
    evals_used: int


@dataclass(frozen=True)
class MetricsConfig:
    success_tol: float = 0.005
    k: int = 5

    def __post_init__(self):
        if not self.success_tol > 0:
            raise ConfigError("success_tol must be > 0", key="success_tol")
        if self.k < 1:
            raise ConfigError("k must be >= 1", key="k")


@dataclass(frozen=True)
class Effort:
    evals: int
    censored: bool


@dataclass(frozen=True)
class BoxplotStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    std: float


def _fitness(trace) -> np.ndarray:
    if isinstance(trace, RunTrace):
        return trace.fitness
    return np.asarray(trace, dtype=np.float64)


def _y_star(bench) -> float:
    y = bench.y_star if isinstance(bench, Benchmark) else float(bench)
    if not y > 0:
        raise ContractViolation(f"the reference minimum must be positive, got {y}")
    return y


def success_mask(trace, bench, tol: float = 0.005) -> np.ndarray:
    y = _y_star(bench)
    return np.abs(_fitness(trace) - y) / y <= tol


def success_rate(trace, bench, tol: float = 0.005) -> float:
    """Percentage of evaluations within ``tol`` (relative, two-sided) of the reference."""
    hits = success_mask(trace, bench, tol)
    if hits.size == 0:
        raise ContractViolation("success rate of an empty trace")
    return 100.0 * int(hits.sum()) / hits.size


def absolute_percentage_error(y_hat: float, bench) -> float:
    y = _y_star(bench)
    return 100.0 * abs(y - y_hat) / y


def mape(run_bests, bench) -> float:
    """Mean absolute percentage error of per-repetition best values against the reference."""
    y = _y_star(bench)
    bests = np.asarray(run_bests, dtype=np.float64)
    if bests.size == 0:
        raise ContractViolation("MAPE of an empty list")
    return float(100.0 / bests.size * np.sum(np.abs(y - bests) / y))


def computational_effort(trace, bench, tol: float = 0.005, k: int = 5) -> Effort:
    """1-based index of the k-th successful evaluation, censored at the trace length."""
    if k < 1:
        raise ContractViolation("k must be >= 1")
    hits = np.flatnonzero(success_mask(trace, bench, tol))
    if hits.size >= k:
        return Effort(int(hits[k - 1]) + 1, False)
    return Effort(len(_fitness(trace)), True)


def boxplot_stats(values) -> BoxplotStats:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ContractViolation("boxplot of an empty list")
    # numpy's default "linear" method interpolates at q * (n - 1)
    q1, med, q3 = np.percentile(v, [25, 50, 75], method="linear")
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return BoxplotStats(float(v[0]), float(q1), float(med), float(q3), float(v[-1]),
                        float(v.mean()), std)


def estimate_benchmark(
    space: SpaceSpec,
    make_objective: Callable[[], Objective],
    method: str = "exhaustive_grid",
    seed: int = 0,
    ga_config: GaConfig = LONG_GA,
) -> Benchmark:
    """Estimate the reference minimum ``(x*, y*)``.

    ``long_ga`` runs a long genetic algorithm; ``exhaustive_grid`` evaluates
    every feasible lattice point; ``analytic`` asks a synthetic objective for
    its known minimum without evaluating anything.
    """
    if method not in BENCHMARK_METHODS:
        raise ConfigError(f"unknown benchmark method {method!r}", key="method")
    obj = make_objective()
    try:
        if method == "analytic":
            if not isinstance(obj, SyntheticObjective):
                raise ConfigError("analytic benchmark needs the synthetic objective", key="method")
            x, y = obj.known_minimum()
            return Benchmark(y, x, method, 0)
        if method == "exhaustive_grid":
            best_x, best_y = None, np.inf
            for p in grid_points(space):
                f = obj.evaluate(p)
                if f < best_y:
                    best_x, best_y = p, f
            return Benchmark(best_y, best_x, method, obj.eval_count)
        trace = run_ga(ga_config, space, obj, seed, algo="long_ga")
        return Benchmark(trace.best_f, trace.best_x, method, len(trace))
    finally:
        obj.close()
