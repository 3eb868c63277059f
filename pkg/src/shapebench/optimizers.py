"""Genetic algorithm, random search and grid search under an evaluation budget.

Each ``run_*`` function takes a fresh objective and a seed and returns a
``RunTrace`` holding every evaluation in order. All randomness comes from a
single ``numpy.random.default_rng(seed)`` stream per run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation
from .objectives import Objective
from .space import SpaceSpec, grid_points, repair, sample_uniform


@dataclass(frozen=True)
class GaConfig:
    init_pop: int = 100
    gen_pop: int = 50
    num_gen: int = 5
    num_elit: int = 2
    mutation_rate: float = 0.1
    budget: int = 350

    def __post_init__(self):
        for key in ("init_pop", "gen_pop", "budget"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1", key=key)
        if self.init_pop < 2 or self.gen_pop < 2:
            raise ConfigError("populations need at least two members to pick parents", key="gen_pop")
        if self.num_gen < 0:
            raise ConfigError("num_gen must be >= 0", key="num_gen")
        if not 0 <= self.num_elit < self.gen_pop:
            raise ConfigError("num_elit must lie in [0, gen_pop)", key="num_elit")
        if self.num_elit > self.init_pop:
            raise ConfigError("num_elit must not exceed init_pop", key="num_elit")
        if (self.gen_pop - self.num_elit) % 2:
            raise ConfigError("gen_pop - num_elit must be even (children come in pairs)", key="num_elit")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate out of [0,1]", key="mutation_rate")
        if self.init_pop > self.budget:
            raise ConfigError("budget must cover the initial population", key="budget")

    @property
    def num_cros(self) -> int:
        return (self.gen_pop - self.num_elit) // 2

    @property
    def planned_evals(self) -> int:
        return min(self.budget, self.init_pop + self.num_gen * (self.gen_pop - self.num_elit))


@dataclass(frozen=True)
class RsConfig:
    budget: int = 350

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError("budget must be >= 1", key="budget")


@dataclass(frozen=True)
class GsConfig:
    budget: int = 350
    without_replacement: bool = True

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError("budget must be >= 1", key="budget")


@dataclass(frozen=True)
class EvalRecord:
    index: int
    x: np.ndarray
    f: float
    best_so_far: float


@dataclass(frozen=True)
class RunTrace:
    algo: str
    seed: int
    records: tuple[EvalRecord, ...]
    best_x: np.ndarray
    best_f: float
    # population minimum after initialisation and after each generation (GA only)
    generation_minima: tuple[float, ...] = field(default=())

    def __len__(self):
        return len(self.records)

    @property
    def fitness(self) -> np.ndarray:
        return np.array([r.f for r in self.records])


class _Recorder:
    def __init__(self, obj: Objective, budget: int):
        if obj.eval_count != 0:
            raise ContractViolation("optimizers need a fresh objective (eval_count == 0)")
        self.obj = obj
        self.budget = budget
        self.records: list[EvalRecord] = []
        self.best = np.inf
        self.best_x = None

    @property
    def exhausted(self) -> bool:
        return len(self.records) >= self.budget

    def evaluate(self, x: np.ndarray) -> float:
        f = float(self.obj.evaluate(x))
        x = x.copy()
        x.flags.writeable = False
        if f < self.best:
            self.best, self.best_x = f, x
        self.records.append(EvalRecord(len(self.records) + 1, x, f, self.best))
        return f

    def trace(self, algo, seed, generation_minima=()) -> RunTrace:
        return RunTrace(algo, seed, tuple(self.records), self.best_x, self.best,
                        tuple(generation_minima))


def one_point_crossover(a, b, cut: int):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractViolation("parents must be 1-D vectors of equal length >= 2")
    if not 1 <= cut <= a.size - 1:
        raise ContractViolation(f"cut must lie in [1, {a.size - 1}], got {cut}")
    return (np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]]))


def mutate(v, rate: float, bound: float, rng: np.random.Generator) -> np.ndarray:
    """Replace each gene, with probability ``rate``, by a fresh uniform draw in the box."""
    v = np.asarray(v, dtype=np.float64)
    hit = rng.random(v.size) < rate
    fresh = rng.uniform(-bound, bound, v.size)
    return np.where(hit, fresh, v)


def select_elites(pop, num_elit: int) -> list:
    """The ``num_elit`` lowest-fitness ``(x, f)`` entries; ties keep input order."""
    if num_elit > len(pop):
        raise ContractViolation("num_elit exceeds the population size")
    order = sorted(range(len(pop)), key=lambda i: pop[i][1])
    return [pop[i] for i in order[:num_elit]]


def run_ga(cfg: GaConfig, space: SpaceSpec, obj: Objective, seed: int, algo: str = "ga") -> RunTrace:
    rng = np.random.default_rng(seed)
    rec = _Recorder(obj, cfg.budget)

    initial = []
    for _ in range(cfg.init_pop):
        x = sample_uniform(space, rng)
        initial.append((x, rec.evaluate(x)))
    pop = select_elites(initial, min(cfg.gen_pop, len(initial)))
    minima = [pop[0][1]]

    for _ in range(cfg.num_gen):
        if rec.exhausted:
            break
        elites = select_elites(pop, cfg.num_elit)
        children = []
        for _ in range(cfg.num_cros):
            ia, ib = rng.choice(len(pop), size=2, replace=False)
            cut = int(rng.integers(1, space.n))
            pair = one_point_crossover(pop[ia][0], pop[ib][0], cut)
            for child in pair:
                child = repair(space, mutate(child, cfg.mutation_rate, space.bound, rng), rng)
                if rec.exhausted:
                    break
                children.append((child, rec.evaluate(child)))
            if rec.exhausted:
                break
        pop = elites + children
        minima.append(min(f for _, f in pop))

    return rec.trace(algo, seed, minima)


def run_rs(cfg: RsConfig, space: SpaceSpec, obj: Objective, seed: int, algo: str = "rs") -> RunTrace:
    rng = np.random.default_rng(seed)
    rec = _Recorder(obj, cfg.budget)
    while not rec.exhausted:
        rec.evaluate(sample_uniform(space, rng))
    return rec.trace(algo, seed)


def run_gs(cfg: GsConfig, space: SpaceSpec, obj: Objective, seed: int, algo: str = "gs") -> RunTrace:
    """Random draws from the feasible lattice.

    Without replacement (the default) this is a seeded shuffle of the lattice
    truncated to the budget, so a budget at least the lattice size makes the
    search exhaustive.
    """
    rng = np.random.default_rng(seed)
    points = grid_points(space)
    if cfg.without_replacement:
        take = min(cfg.budget, len(points))
        order = rng.permutation(len(points))[:take]
    else:
        order = rng.integers(0, len(points), cfg.budget)
    rec = _Recorder(obj, len(order))
    for i in order:
        rec.evaluate(points[i])
    return rec.trace(algo, seed)
