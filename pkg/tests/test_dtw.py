"""Tests for one-dimensional DTW and its brute-force oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridwarp.core.dtw import (
    accumulated_cost,
    cost_matrix,
    dtw,
    dtw_bruteforce,
    dtw_cost,
    local_cost,
    validate_path,
)
from gridwarp.errors import InvalidInputError, OracleSizeError
from gridwarp.models.warp import CostKind, EndpointMode, WarpPath

samples = st.lists(
    st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=8,
)


def test_local_cost_definitions():
    """Absolute and squared costs follow their definitions."""
    assert local_cost(3, 3) == 0
    assert local_cost(1, 4) == 3
    assert local_cost(1, 4, CostKind.SQUARED) == 9
    assert local_cost(4, 1, CostKind.SQUARED) == local_cost(1, 4, CostKind.SQUARED)


def test_dtw_identical_sequences_follow_diagonal():
    cost, path = dtw([1, 2, 3], [1, 2, 3])
    assert cost == 0
    assert path.steps == [(1, 1), (2, 2), (3, 3)]


def test_dtw_single_samples():
    cost, path = dtw([0], [5])
    assert cost == 5
    assert path.steps == [(1, 1)]


def test_dtw_absorbs_repeated_sample():
    """A duplicated sample is warped away at zero cost."""
    cost, path = dtw([1, 2, 3], [1, 2, 2, 3])
    assert cost == 0
    assert validate_path(path)
    assert dtw_bruteforce([1, 2, 3], [1, 2, 2, 3]) == 0


def test_bruteforce_small_cases():
    assert dtw_bruteforce([1, 2], [1, 2]) == 0
    assert dtw_bruteforce([0, 10], [10, 0]) == 20


def test_bruteforce_refuses_large_problems():
    with pytest.raises(OracleSizeError):
        dtw_bruteforce(np.zeros(9), np.zeros(8))


def test_empty_or_non_finite_sequences_rejected():
    with pytest.raises(InvalidInputError):
        dtw([], [1.0])
    with pytest.raises(InvalidInputError):
        dtw([1.0, np.nan], [1.0])
    # InvalidInputError is also a ValueError
    with pytest.raises(ValueError):
        dtw_cost([1.0], [])


def test_dtw_matches_bruteforce_on_random_pairs(rng):
    """1000 random pairs with lengths up to 8: DP cost equals exhaustive minimum exactly."""
    for trial in range(1000):
        m, n = rng.integers(1, 9, size=2)
        x = rng.normal(size=m)
        y = rng.normal(size=n)
        kind = CostKind.SQUARED if trial % 2 else CostKind.ABSOLUTE
        cost, path = dtw(x, y, kind)
        assert cost == dtw_bruteforce(x, y, kind)
        assert validate_path(path)


def test_path_attains_reported_cost(rng):
    for _ in range(50):
        x = rng.random(rng.integers(1, 10))
        y = rng.random(rng.integers(1, 10))
        cost, path = dtw(x, y)
        c = cost_matrix(x, y)
        assert sum(c[i - 1, j - 1] for i, j in path.steps) == pytest.approx(cost, abs=1e-12)


def test_cost_only_variant_is_bitwise_identical(rng):
    for _ in range(100):
        x = rng.normal(size=rng.integers(1, 12))
        y = rng.normal(size=rng.integers(1, 12))
        assert dtw_cost(x, y) == dtw(x, y)[0]


def test_accumulated_cost_first_row_is_running_sum():
    F = accumulated_cost(np.array([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]]))
    assert F[0] == [1.0, 3.0, 6.0]
    assert F[1] == [2.0, 2.0, 3.0]


@given(samples)
def test_self_distance_is_zero(x):
    cost, path = dtw(x, x)
    assert cost == 0
    assert path.steps == [(k, k) for k in range(1, len(x) + 1)]


@settings(max_examples=200)
@given(samples, samples)
def test_dtw_is_symmetric_and_nonnegative(x, y):
    forward, path = dtw(x, y)
    backward, _ = dtw(y, x)
    assert forward >= 0
    assert forward == pytest.approx(backward)
    assert validate_path(path, EndpointMode.FIXED)


class TestValidatePath:
    def test_diagonal_path_is_valid(self):
        assert validate_path(WarpPath(steps=[(1, 1), (2, 2)], dims=(2, 2)))

    def test_zero_step_rejected(self):
        assert not validate_path(WarpPath(steps=[(1, 1), (1, 1)], dims=(1, 1)))

    def test_decreasing_j_rejected(self):
        assert not validate_path(WarpPath(steps=[(1, 2), (2, 1)], dims=(2, 2)))

    def test_free_mode_only_pins_rows(self):
        path = WarpPath(steps=[(1, 2), (2, 3)], dims=(2, 4))
        assert not validate_path(path, EndpointMode.FIXED)
        assert validate_path(path, EndpointMode.FREE_J)

    def test_out_of_bounds_rejected(self):
        assert not validate_path(WarpPath(steps=[(1, 1), (2, 3)], dims=(2, 2)))
