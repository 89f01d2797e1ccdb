import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sigknn.dtw import DtwConfig, dtw_bruteforce_oracle, dtw_distance, local_distance
from sigknn.errors import DimensionMismatch, InfeasibleBand, SeriesTooLong
from sigknn.preprocess import FeatureSeries


def test_local_distance_345():
    assert local_distance((0, 0, 0), (3, 4, 0)) == 5.0


def test_local_distance_identity():
    assert local_distance((0.1, -2, 7), (0.1, -2, 7)) == 0.0


def test_local_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        local_distance((0, 0), (0, 0, 0))


def test_identical_series_zero():
    a = np.random.default_rng(0).uniform(-1, 1, size=(12, 3))
    r = dtw_distance(a, a)
    assert r.raw_distance == 0.0
    assert r.path_length == 12


def test_single_points():
    r = dtw_distance([[0, 0, 0]], [[3, 4, 0]])
    assert r.raw_distance == 5.0
    assert r.normalized_distance == 2.5
    assert r.path_length == 1


def test_one_dimensional_example():
    # frozen from dtw_bruteforce_oracle: 1 aligns to either endpoint at cost 1
    assert dtw_bruteforce_oracle([[0], [1], [2]], [[0], [2]]) == 1.0
    r = dtw_distance([[0], [1], [2]], [[0], [2]])
    assert r.raw_distance == 1.0
    assert r.normalized_distance == pytest.approx(1.0 / 5)
    assert r.path_length == 3


def test_accepts_feature_series():
    a = FeatureSeries(np.array([[0.0, 0.0], [1.0, 1.0]]), ("x", "y"))
    b = FeatureSeries(np.array([[0.0, 0.0]]), ("x", "y"))
    assert dtw_distance(a, b).raw_distance == pytest.approx(np.sqrt(2))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        dtw_distance(np.zeros((3, 2)), np.zeros((3, 3)))


def test_unnormalized():
    r = dtw_distance([[0], [1]], [[3]], DtwConfig(normalize_by_length=False))
    assert r.normalized_distance == r.raw_distance == 5.0


def test_infeasible_band():
    with pytest.raises(InfeasibleBand):
        dtw_distance(np.zeros((3, 1)), np.zeros((2, 1)), DtwConfig(band_radius=0))


def test_zero_band_equal_lengths_is_diagonal():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    r = dtw_distance(a, b, DtwConfig(band_radius=0))
    assert r.raw_distance == pytest.approx(np.linalg.norm(a - b, axis=1).sum())
    assert r.path_length == 6


def test_band_config_validation():
    with pytest.raises(ValueError):
        DtwConfig(band_radius=-1)
    with pytest.raises(ValueError):
        DtwConfig(band_radius=1.5)


def test_oracle_too_long():
    with pytest.raises(SeriesTooLong):
        dtw_bruteforce_oracle(np.zeros((8, 1)), np.zeros((2, 1)))


def test_oracle_identity():
    a = np.random.default_rng(1).normal(size=(5, 3))
    assert dtw_bruteforce_oracle(a, a) == 0.0


@pytest.mark.parametrize("n, m", [(1, 1), (1, 7), (3, 5), (7, 7)])
def test_oracle_uniform_cost_gives_shortest_path(n, m):
    # every cell costs 1, so the optimum is the shortest monotone path
    a = np.zeros((n, 1))
    b = np.ones((m, 1))
    assert dtw_bruteforce_oracle(a, b) == max(n, m)
    r = dtw_distance(a, b)
    assert r.raw_distance == max(n, m)
    assert r.path_length == max(n, m)


def test_oracle_matches_dp_3x3():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a, b = rng.uniform(-1, 1, (3, 3)), rng.uniform(-1, 1, (3, 3))
        assert dtw_distance(a, b).raw_distance == pytest.approx(dtw_bruteforce_oracle(a, b), abs=1e-12)


series = st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (n, 3), elements=st.floats(-1, 1, allow_nan=False))
)


@settings(max_examples=300, deadline=None)
@given(series, series)
def test_oracle_equivalence_property(a, b):
    assert abs(dtw_distance(a, b).raw_distance - dtw_bruteforce_oracle(a, b)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(series, series)
def test_symmetry_and_non_negativity(a, b):
    ab, ba = dtw_distance(a, b), dtw_distance(b, a)
    assert ab.raw_distance == ba.raw_distance
    assert ab.raw_distance >= 0
    assert ab.path_length >= max(len(a), len(b))
    assert ab.path_length <= len(a) + len(b) - 1
    assert ab.normalized_distance == ab.raw_distance / (len(a) + len(b))


def test_band_monotonicity():
    rng = np.random.default_rng(5)
    for _ in range(40):
        n, m = rng.integers(2, 30, size=2)
        a, b = rng.normal(size=(n, 3)), rng.normal(size=(m, 3))
        free = dtw_distance(a, b).raw_distance
        previous = free
        for radius in range(max(n, m), -1, -1):
            try:
                d = dtw_distance(a, b, DtwConfig(band_radius=radius)).raw_distance
            except InfeasibleBand:
                break
            assert d >= previous
            assert d >= free
            previous = d


def test_banded_symmetry():
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=(17, 3)), rng.normal(size=(11, 3))
    cfg = DtwConfig(band_radius=3)
    assert dtw_distance(a, b, cfg).raw_distance == dtw_distance(b, a, cfg).raw_distance


def test_wide_band_equals_unconstrained():
    rng = np.random.default_rng(9)
    a, b = rng.normal(size=(9, 2)), rng.normal(size=(14, 2))
    assert dtw_distance(a, b, DtwConfig(band_radius=14)).raw_distance == dtw_distance(a, b).raw_distance
