"""Feasible design region: the zero-sum slice of a symmetric box.

A shape vector is a float64 array of ``n`` signed offsets in feet. It is
feasible when its components sum to zero (within ``zero_sum_tol``) and every
component lies in ``[-bound, bound]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation, EmptyGridError

REPAIR_MAX_ITER = 100
# lattice values are rounded to this many decimals so that e.g. 3 * 1.6
# lands on the double nearest 4.8 instead of 4.800000000000001
_LATTICE_DECIMALS = 12


@dataclass(frozen=True)
class GridSpec:
    step: float = 1.6
    anchor: float = 0.0

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"grid step must be > 0, got {self.step}", key="step")

    def axis_values(self, bound: float) -> np.ndarray:
        """Ascending values ``anchor + j * step`` that lie within ``[-bound, bound]``."""
        lo = int(np.ceil((-bound - self.anchor) / self.step)) - 1
        hi = int(np.floor((bound - self.anchor) / self.step)) + 1
        j = np.arange(lo, hi + 1)
        vals = np.round(self.anchor + j * self.step, _LATTICE_DECIMALS) + 0.0
        return vals[np.abs(vals) <= bound]


@dataclass(frozen=True)
class SpaceSpec:
    n: int = 4
    bound: float = 11.5
    zero_sum_tol: float | None = None
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {self.n!r}", key="n")
        if not self.bound > 0:
            raise ConfigError(f"bound must be > 0, got {self.bound}", key="bound")
        if self.zero_sum_tol is None:
            object.__setattr__(self, "zero_sum_tol", 1e-9 * self.n * self.bound)
        elif not self.zero_sum_tol >= 0:
            raise ConfigError(
                f"zero_sum_tol must be >= 0, got {self.zero_sum_tol}", key="zero_sum_tol"
            )


def _check_dim(space: SpaceSpec, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (space.n,):
        raise ContractViolation(f"expected a vector of length {space.n}, got shape {v.shape}")
    return v


def _feasible(space: SpaceSpec, xs: list) -> bool:
    # left-to-right summation; grid_points reproduces the same operation order
    return (abs(sum(xs)) <= space.zero_sum_tol
            and max(xs) <= space.bound and min(xs) >= -space.bound)


def is_feasible(space: SpaceSpec, v) -> bool:
    return _feasible(space, _check_dim(space, v).tolist())


def sample_uniform(space: SpaceSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a point uniformly from the feasible polytope.

    The first ``n - 1`` coordinates are drawn uniformly from the box and the
    last one closes the sum; draws whose last coordinate leaves the box are
    rejected. The map from the free coordinates to the polytope is linear with
    constant Jacobian, so accepted points are exactly uniform.
    """
    b = space.bound
    while True:
        head = rng.uniform(-b, b, space.n - 1)
        head = head.tolist()
        last = -sum(head)
        if -b <= last <= b:
            return np.array(head + [last])


def repair(space: SpaceSpec, v, rng: np.random.Generator | None = None) -> np.ndarray:
    """Map ``v`` onto the feasible region.

    Alternates clamping to the box and subtracting the component mean until
    the vector is feasible. Feasible input comes back unchanged. If the
    iteration has not converged after ``REPAIR_MAX_ITER`` rounds a fresh
    uniform sample is returned instead, which needs ``rng``.
    """
    v = _check_dim(space, v)
    if is_feasible(space, v):
        return v.copy()
    b, tol, n = space.bound, space.zero_sum_tol, space.n
    # plain floats: far cheaper than small-array numpy calls at n ~ 4
    x = v.tolist()
    for _ in range(REPAIR_MAX_ITER):
        x = [b if c > b else -b if c < -b else c for c in x]
        total = sum(x)
        if abs(total) <= tol:
            return np.array(x)
        mean = total / n
        x = [c - mean for c in x]
        if _feasible(space, x):
            return np.array(x)
    if rng is None:
        raise ContractViolation("repair did not converge and no rng was given for the fallback")
    return sample_uniform(space, rng)


def grid_points(space: SpaceSpec) -> list[np.ndarray]:
    """All feasible lattice points, in lexicographic order of their components."""
    axis = space.grid.axis_values(space.bound)
    if axis.size == 0:
        raise EmptyGridError("no lattice value lies inside the bounds")
    pts = np.array(list(itertools.product(axis, repeat=space.n)), dtype=np.float64)
    total = pts[:, 0].copy()
    for i in range(1, space.n):
        total += pts[:, i]
    keep = np.abs(total) <= space.zero_sum_tol
    pts = pts[keep]
    if len(pts) == 0:
        raise EmptyGridError("no lattice point satisfies the zero-sum constraint")
    return list(pts)
