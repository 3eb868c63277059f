"""Two-axis slices of the objective over the constrained space."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .objectives import Objective
from .space import SpaceSpec, is_feasible

FILL_STRATEGIES = ("equal_split",)


@dataclass(frozen=True)
class SliceTable:
    axes: tuple[int, int]  # 0-based
    fill: str
    xi: np.ndarray
    xj: np.ndarray
    values: np.ndarray  # values[a, b] at (xi[a], xj[b]); NaN where infeasible

    @property
    def resolution(self) -> int:
        return self.xi.size

    def rows(self):
        """``(xi, xj, f_or_None)`` in row-major order of the lattice."""
        for a, u in enumerate(self.xi):
            for b, w in enumerate(self.xj):
                f = self.values[a, b]
                yield float(u), float(w), (None if np.isnan(f) else float(f))


def fill_vector(space: SpaceSpec, axis_i: int, axis_j: int, xi: float, xj: float,
                fill: str = "equal_split") -> np.ndarray:
    """Full vector with ``x[axis_i] = xi``, ``x[axis_j] = xj`` and the rest filled in.

    ``equal_split`` gives every remaining component ``-(xi + xj) / (n - 2)``,
    which restores the zero sum.
    """
    if fill not in FILL_STRATEGIES:
        raise ContractViolation(f"unknown fill strategy {fill!r}")
    if space.n < 3:
        raise ContractViolation("equal_split fill needs at least one free component (n >= 3)")
    x = np.full(space.n, -(xi + xj) / (space.n - 2))
    x[axis_i] = xi
    x[axis_j] = xj
    return x


def slice_grid(space: SpaceSpec, obj: Objective, axis_i: int, axis_j: int,
               resolution: int = 50, fill: str = "equal_split") -> SliceTable:
    """Evaluate ``obj`` on a ``resolution x resolution`` lattice over two axes (0-based)."""
    if axis_i == axis_j:
        raise ContractViolation("axes must differ")
    for a in (axis_i, axis_j):
        if not 0 <= a < space.n:
            raise ContractViolation(f"axis {a} out of range for n = {space.n}")
    if resolution < 2:
        raise ContractViolation("resolution must be >= 2")
    if space.n < 3:
        raise ContractViolation("equal_split fill needs at least one free component (n >= 3)")
    ticks = np.linspace(-space.bound, space.bound, resolution)
    values = np.full((resolution, resolution), np.nan)
    for a, u in enumerate(ticks):
        for b, w in enumerate(ticks):
            x = fill_vector(space, axis_i, axis_j, u, w, fill)
            if is_feasible(space, x):
                values[a, b] = obj.evaluate(x)
    return SliceTable((axis_i, axis_j), fill, ticks, ticks.copy(), values)


def count_local_minima(table) -> int:
    """Number of present cells strictly below every present 8-neighbour."""
    v = table.values if isinstance(table, SliceTable) else np.asarray(table, dtype=np.float64)
    rows, cols = v.shape
    padded = np.full((rows + 2, cols + 2), np.nan)
    padded[1:-1, 1:-1] = v
    is_min = ~np.isnan(v)
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            if da == 0 and db == 0:
                continue
            nb = padded[1 + da:1 + da + rows, 1 + db:1 + db + cols]
            # a missing neighbour never disqualifies
            is_min &= np.isnan(nb) | (v < nb)
    return int(is_min.sum())
