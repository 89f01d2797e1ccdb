import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigknn.errors import (
    DegenerateThresholds,
    EmptyReferenceSet,
    InsufficientData,
    InsufficientReferences,
    NoFallbackAvailable,
)
from sigknn.knn import (
    Decision,
    GlobalCalibration,
    KnnConfig,
    ReferenceSet,
    Thresholds,
    ThresholdSource,
    build_reference_set,
    calibrate_from_series,
    calibrate_global,
    compute_thresholds,
    knn_mean_distance,
    score,
    score_distance,
)
from sigknn.preprocess import FeatureSeries


def fs(*rows):
    return FeatureSeries(np.array(rows, dtype=float).reshape(len(rows), -1), ("v",))


def fixed_set(row):
    """Reference set whose first row of cached distances is ``row``."""
    n = len(row) + 1
    d = np.zeros((n, n))
    d[0, 1:] = d[1:, 0] = row
    refs = tuple(fs([i]) for i in range(n))
    return ReferenceSet("w", refs, d)


def test_build_reference_set_four():
    refs = [fs([0], [1]), fs([1]), fs([2], [2], [3]), fs([5])]
    rs = build_reference_set("w", refs)
    assert rs.pairwise.shape == (4, 4)
    assert np.array_equal(rs.pairwise, rs.pairwise.T)
    assert np.all(np.diag(rs.pairwise) == 0)
    assert rs.pairwise[0, 3] > 0


def test_build_reference_set_single():
    rs = build_reference_set("w", [fs([1])])
    assert rs.pairwise.tolist() == [[0.0]]


def test_build_reference_set_empty():
    with pytest.raises(EmptyReferenceSet):
        build_reference_set("w", [])


@pytest.mark.parametrize("K, expected", [(2, 0.3), (1, 0.2), (5, 0.4)])
def test_knn_mean_distance(K, expected):
    assert knn_mean_distance(fixed_set([0.2, 0.4, 0.6]), 0, K) == pytest.approx(expected)


def test_knn_mean_distance_needs_two():
    with pytest.raises(InsufficientReferences):
        knn_mean_distance(build_reference_set("w", [fs([1])]), 0, 1)


def test_thresholds_writer_local():
    rs = fixed_set([0.3, 0.3])
    th = compute_thresholds(rs, KnnConfig(K=2, theta=1.5), 0)
    assert (th.g_th, th.f_th) == pytest.approx((0.3, 0.45))
    assert th.source is ThresholdSource.WRITER_LOCAL


def test_thresholds_global_fallback():
    rs = build_reference_set("w", [fs([1])])
    th = compute_thresholds(rs, KnnConfig(theta=1.5), 0, GlobalCalibration(0.25))
    assert (th.g_th, th.f_th) == (0.25, 0.375)
    assert th.source is ThresholdSource.GLOBAL_FALLBACK


def test_thresholds_no_fallback():
    with pytest.raises(NoFallbackAvailable):
        compute_thresholds(build_reference_set("w", [fs([1])]), KnnConfig(), 0)


def test_thresholds_duplicate_references_degenerate():
    rs = build_reference_set("w", [fs([1], [2]), fs([1], [2])])
    with pytest.raises(DegenerateThresholds):
        compute_thresholds(rs, KnnConfig(), 0)


def test_thresholds_s_theta_below_one_degenerate():
    with pytest.raises(DegenerateThresholds):
        compute_thresholds(fixed_set([0.3]), KnnConfig(theta=1.5, s=0.5), 0)


def th(g, f):
    return Thresholds(g_th=g, f_th=f, base=g, source=ThresholdSource.WRITER_LOCAL)


@pytest.mark.parametrize("g, f, s, d, p_q, score_, decision", [
    (1, 2, 1, 1, 1, 0, Decision.GENUINE),
    (1, 2, 1, 2, 0, 1, Decision.FORGED),
    (1, 2, 2, 2.5, 0.5, 0.5, Decision.FORGED),
])
def test_score_distance_examples(g, f, s, d, p_q, score_, decision):
    r = score_distance(d, th(g, f), KnnConfig(s=s))
    assert r.p_q == p_q
    assert r.forgery_score == score_
    assert r.decision is decision


def test_score_clamps():
    low = score_distance(0.0, th(1, 2), KnnConfig())
    high = score_distance(10.0, th(1, 2), KnnConfig())
    assert low.forgery_score == 0 and low.raw_forgery_score == -1
    assert high.forgery_score == 1 and high.raw_forgery_score == 9


def test_score_picks_nearest_reference_lowest_index_on_ties():
    refs = [fs([5]), fs([1]), fs([1]), fs([3])]
    rs = build_reference_set("w", refs)
    r = score(fs([1]), rs, KnnConfig(K=3))
    assert r.d_s == 0 and r.nn_index == 1
    # anchored at reference 1: raw distances {4, 0, 2} over length 2 -> {2, 0, 1}, mean 1
    assert r.thresholds.g_th == pytest.approx(1.0)


def test_score_self_is_genuine():
    refs = [fs([0], [1], [2]), fs([0], [2]), fs([1], [1], [2])]
    r = score(refs[0], build_reference_set("w", refs))
    assert r.d_s == 0 and r.forgery_score == 0 and r.decision is Decision.GENUINE


def test_score_is_deterministic():
    rng = np.random.default_rng(0)
    refs = [FeatureSeries(rng.normal(size=(20, 3))) for _ in range(4)]
    q = FeatureSeries(rng.normal(size=(18, 3)))
    rs = build_reference_set("w", refs)
    assert score(q, rs) == score(q, rs)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-3, 10), st.floats(1.01, 5), st.floats(0.5, 3), st.floats(0, 50))
def test_score_polarity(base, theta, s, d):
    cfg = KnnConfig(theta=theta, s=s)
    t = th(base, theta * base)
    if not s * t.f_th > t.g_th:
        return
    r = score_distance(d, t, cfg)
    assert abs(r.raw_forgery_score + r.p_q - 1) <= 1e-12 * max(1.0, abs(r.p_q))
    assert score_distance(t.g_th, t, cfg).forgery_score == 0
    assert score_distance(s * t.f_th, t, cfg).forgery_score == 1
    assert score_distance(d + 0.1, t, cfg).forgery_score >= r.forgery_score


def test_theta_monotonicity():
    d, base = 0.5, 0.3
    previous = np.inf
    for theta in np.linspace(1.8, 6, 30):
        r = score_distance(d, th(base, theta * base), KnnConfig(theta=theta))
        assert r.raw_forgery_score < previous
        previous = r.raw_forgery_score


@pytest.mark.parametrize("kwargs", [dict(K=0), dict(theta=0), dict(s=-1), dict(decision_tau=1.5)])
def test_knn_config_validation(kwargs):
    with pytest.raises(ValueError):
        KnnConfig(**kwargs)


def test_calibrate_from_series_single_signer():
    # two genuines at distance 0.2 (normalised): each NN distance is 0.2
    out = calibrate_from_series({"a": [fs([0]), fs([0.4])]})
    assert out.global_base == pytest.approx(0.2)


def test_calibrate_from_series_pooled():
    out = calibrate_from_series({
        "a": [fs([0]), fs([0.2])],
        "b": [fs([0]), fs([0.6])],
    })
    assert out.global_base == pytest.approx(0.2)
    assert out.n_values == 4


def test_calibrate_insufficient():
    with pytest.raises(InsufficientData):
        calibrate_from_series({"a": [fs([0])], "b": [fs([1])]})


def test_calibrate_global_from_manifest(small_dataset):
    manifest, _ = small_dataset
    cal = calibrate_global(manifest)
    assert cal.global_base > 0
    assert cal.n_values == 10


def test_calibration_file_round_trip(tmp_path):
    cal = GlobalCalibration(0.0123, 7)
    assert GlobalCalibration.load(cal.save(tmp_path / "c.json")) == cal


def test_global_calibration_rejects_zero():
    with pytest.raises(ValueError):
        GlobalCalibration(0.0)
