from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapebench import space as sp
from shapebench.errors import ConfigError, ContractViolation, EmptyGridError
from shapebench.space import GridSpec, SpaceSpec, grid_points, is_feasible, repair, sample_uniform

from oracles import brute_force_grid, zero_sum_count

SPACE = SpaceSpec()


def test_is_feasible_examples():
    assert is_feasible(SPACE, [0, 0, 0, 0])
    assert not is_feasible(SPACE, [11.6, 0, 0, -11.6])
    assert not is_feasible(SPACE, [5, 5, -5, -4])


def test_is_feasible_dimension_mismatch():
    with pytest.raises(ContractViolation):
        is_feasible(SPACE, [0, 0, 0])


def test_space_validation():
    with pytest.raises(ConfigError):
        SpaceSpec(n=1)
    with pytest.raises(ConfigError):
        SpaceSpec(bound=0)
    with pytest.raises(ConfigError):
        SpaceSpec(zero_sum_tol=-1)
    with pytest.raises(ConfigError):
        GridSpec(step=0)
    assert SPACE.zero_sum_tol == pytest.approx(1e-9 * 4 * 11.5)


def test_axis_values_default_grid():
    axis = SPACE.grid.axis_values(SPACE.bound)
    assert axis.size == 15
    assert axis[0] == -11.2 and axis[-1] == 11.2
    assert 0.0 in axis and 4.8 in axis


@pytest.mark.parametrize("n,bound,m,expected", [(4, 11.5, 7, 2255), (4, 3.2, 2, 85)])
def test_grid_counts(n, bound, m, expected):
    assert zero_sum_count(n, m) == expected
    assert comb(31, 3) - 4 * comb(16, 3) == 2255
    assert comb(11, 3) - 4 * comb(6, 3) == 85
    assert len(grid_points(SpaceSpec(n=n, bound=bound))) == expected


def test_grid_n2():
    pts = grid_points(SpaceSpec(n=2))
    assert len(pts) == 15
    for p in pts:
        assert p[0] == -p[1]
        assert round(p[0] / 1.6) * 1.6 == pytest.approx(p[0])


@pytest.mark.parametrize("n,bound", [(2, 11.5), (3, 11.5), (4, 3.2), (4, 11.5), (3, 5.0)])
def test_grid_matches_brute_force(n, bound):
    ours = [tuple(p) for p in grid_points(SpaceSpec(n=n, bound=bound))]
    assert ours == brute_force_grid(n, bound, 1.6)


def test_grid_with_anchor_matches_brute_force():
    space = SpaceSpec(n=4, bound=4.0, grid=GridSpec(step=1.0, anchor=0.5))
    assert [tuple(p) for p in grid_points(space)] == brute_force_grid(4, 4.0, 1.0, 0.5)


def test_empty_grid():
    # odd count of half-integers can never sum to zero
    with pytest.raises(EmptyGridError):
        grid_points(SpaceSpec(n=3, bound=1.0, grid=GridSpec(step=1.0, anchor=0.5)))
    with pytest.raises(EmptyGridError):
        grid_points(SpaceSpec(n=2, bound=1.0, grid=GridSpec(step=5.0, anchor=3.0)))


def test_sample_uniform_feasible_and_n2():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        assert is_feasible(SPACE, sample_uniform(SPACE, rng))
    s2 = SpaceSpec(n=2)
    xs = np.array([sample_uniform(s2, rng) for _ in range(2000)])
    assert np.all(xs[:, 0] == -xs[:, 1])
    assert xs[:, 0].min() < -10 and xs[:, 0].max() > 10


def test_sample_uniform_symmetry():
    rng = np.random.default_rng(7)
    xs = np.array([sample_uniform(SPACE, rng) for _ in range(100_000)])
    assert np.all(np.abs(xs.mean(axis=0)) <= 0.2)
    cdf0 = (xs <= 0).mean(axis=0)
    assert np.all((cdf0 >= 0.49) & (cdf0 <= 0.51))


def test_sample_uniform_marginal_matches_exact_density():
    # marginal density of x1 on the polytope, from an independent brute-force
    # count of the feasible (x2, x3) area on a fine grid
    rng = np.random.default_rng(3)
    xs = np.array([sample_uniform(SPACE, rng) for _ in range(60_000)])[:, 0]
    edges = np.linspace(-11.5, 11.5, 9)
    centers = np.linspace(-11.5, 11.5, 801)
    g = np.linspace(-11.5, 11.5, 401)
    a, b = np.meshgrid(g, g)
    area = np.array([(np.abs(c + a + b) <= 11.5).mean() for c in centers])
    expected = np.array([area[(centers >= lo) & (centers < hi)].sum()
                         for lo, hi in zip(edges[:-1], edges[1:])])
    expected /= expected.sum()
    observed = np.histogram(xs, edges)[0] / xs.size
    assert np.allclose(observed, expected, atol=0.01)


def test_sample_uniform_deterministic():
    r1, r2 = np.random.default_rng(5), np.random.default_rng(5)
    seq1 = np.array([sample_uniform(SPACE, r1) for _ in range(500)])
    seq2 = np.array([sample_uniform(SPACE, r2) for _ in range(500)])
    assert seq1.tobytes() == seq2.tobytes()


def test_repair_examples():
    assert repair(SPACE, [20, 0, 0, 0]).tolist() == [8.625, -2.875, -2.875, -2.875]
    assert repair(SPACE, [1, 2, 3, -6]).tolist() == [1, 2, 3, -6]
    assert repair(SPACE, [12, 12, -12, -12]).tolist() == [11.5, 11.5, -11.5, -11.5]


vectors = st.lists(st.floats(-100, 100, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=500, deadline=None)
@given(vectors)
def test_repair_feasible_and_idempotent(v):
    rng = np.random.default_rng(0)
    r = repair(SPACE, v, rng)
    assert is_feasible(SPACE, r)
    rr = repair(SPACE, r, rng)
    assert np.array_equal(r, rr)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.data())
def test_repair_any_dimension(n, data):
    space = SpaceSpec(n=n)
    v = data.draw(st.lists(st.floats(-50, 50, allow_nan=False), min_size=n, max_size=n))
    assert is_feasible(space, repair(space, v, np.random.default_rng(0)))


def test_repair_fallback(monkeypatch):
    monkeypatch.setattr(sp, "REPAIR_MAX_ITER", 0)
    rng = np.random.default_rng(2)
    r = repair(SPACE, [40, 30, -1, 5], rng)
    assert is_feasible(SPACE, r)
    with pytest.raises(ContractViolation):
        repair(SPACE, [40, 30, -1, 5])
    # feasible input never reaches the fallback
    assert repair(SPACE, [1, -1, 0, 0]).tolist() == [1, -1, 0, 0]
