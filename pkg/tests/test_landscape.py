import numpy as np
import pytest

from shapebench.errors import ContractViolation
from shapebench.landscape import count_local_minima, fill_vector, slice_grid
from shapebench.objectives import SyntheticObjective, SyntheticParams
from shapebench.space import SpaceSpec

from oracles import naive_local_minima, synthetic

SPACE = SpaceSpec()


def test_fill_vector():
    assert fill_vector(SPACE, 0, 1, 3.2, -1.6).tolist() == pytest.approx([3.2, -1.6, -0.8, -0.8])
    assert fill_vector(SPACE, 0, 1, 11.5, 11.5).tolist() == [11.5, 11.5, -11.5, -11.5]
    assert fill_vector(SPACE, 2, 0, 1.0, 3.0).tolist() == [3.0, -2.0, 1.0, -2.0]


def test_slice_resolution_3():
    table = slice_grid(SPACE, SyntheticObjective(), 0, 1, resolution=3)
    rows = list(table.rows())
    assert len(rows) == 9
    for u, w, f in rows:
        fill = -(u + w) / 2
        assert f == pytest.approx(synthetic((u, w, fill, fill)), rel=1e-14)


def test_slice_boundary_cells():
    table = slice_grid(SPACE, SyntheticObjective(), 0, 1, resolution=2)
    assert not np.isnan(table.values[-1, -1])
    n3 = SpaceSpec(n=3)
    t3 = slice_grid(n3, SyntheticObjective(SyntheticParams(target=(1.0, -1.0, 0.0))), 0, 1, 2)
    assert np.isnan(t3.values[-1, -1])  # fill would be -23
    assert not np.isnan(t3.values[0, -1])
    assert [f for _, _, f in t3.rows()][-1] is None


def test_slice_errors():
    obj = SyntheticObjective()
    with pytest.raises(ContractViolation, match="differ"):
        slice_grid(SPACE, obj, 1, 1)
    with pytest.raises(ContractViolation):
        slice_grid(SPACE, obj, 0, 1, resolution=1)
    with pytest.raises(ContractViolation):
        slice_grid(SPACE, obj, 0, 4)
    with pytest.raises(ContractViolation):
        slice_grid(SpaceSpec(n=2), SyntheticObjective(SyntheticParams(target=(0, 0))), 0, 1)


def test_count_local_minima_simple():
    assert count_local_minima(np.full((5, 5), 3.0)) == 0
    v = np.array([[3.0, 2.0, 3.0], [2.0, 1.0, 2.0], [3.0, 2.0, 3.0]])
    assert count_local_minima(v) == 1
    v = np.array([[1.0, 5.0, 1.0], [5.0, 5.0, 5.0], [np.nan, 5.0, 1.0]])
    assert count_local_minima(v) == 3
    assert count_local_minima(np.array([[np.nan, np.nan], [np.nan, 2.0]])) == 1


def independent_slice(resolution, ruggedness):
    ticks = np.linspace(-11.5, 11.5, resolution)
    values = []
    for u in ticks:
        row = []
        for w in ticks:
            fill = -(u + w) / 2
            ok = abs(fill) <= 11.5
            row.append(synthetic((u, w, fill, fill), ruggedness=ruggedness) if ok else None)
        values.append(row)
    return values


def test_count_local_minima_matches_scan_oracle():
    for rugged in (0.0, 6.0):
        table = slice_grid(SPACE, SyntheticObjective(SyntheticParams(ruggedness=rugged)), 0, 1, 50)
        assert count_local_minima(table) == naive_local_minima(independent_slice(50, rugged))


def test_quadratic_slice_single_minimum():
    assert naive_local_minima(independent_slice(50, 0.0)) == 1
    table = slice_grid(SPACE, SyntheticObjective(SyntheticParams(ruggedness=0.0)), 0, 1, 50)
    assert count_local_minima(table) == 1


def test_rugged_slice_multimodal():
    assert naive_local_minima(independent_slice(50, 6.0)) >= 2
    table = slice_grid(SPACE, SyntheticObjective(), 0, 1, 50)
    assert count_local_minima(table) >= 2
