import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgad.core import LagTooLarge, SegmentTooShort, validate_series
from cgad.design import build_design, segment, standardize


def _series(t, k=2, labels=None):
    return validate_series(np.arange(t * k, dtype=float).reshape(t, k),
                           [f"s{i}" for i in range(k)], labels)


def test_segment_drops_remainder():
    seg = segment(_series(10), 3)
    assert len(seg) == 3
    assert seg.segments[-1][-1, 0] == 16.0  # row 8


def test_segment_any_point_label():
    seg = segment(_series(9, labels=[0, 0, 0, 0, 1, 0, 0, 0, 0]), 3)
    assert seg.segment_labels == (0, 1, 0)


def test_segment_too_short():
    with pytest.raises(SegmentTooShort):
        segment(_series(5), 6)
    with pytest.raises(SegmentTooShort):
        segment(_series(5), 1)


def test_design_lag1():
    d = build_design([np.array([[1.0], [2.0], [3.0], [4.0]])], 1)
    np.testing.assert_array_equal(d.current, [[2], [3], [4]])
    np.testing.assert_array_equal(d.lagged, [[1], [2], [3]])


def test_design_lag2_block_order():
    d = build_design([np.array([[1.0], [2.0], [3.0], [4.0]])], 2)
    np.testing.assert_array_equal(d.current, [[3], [4]])
    np.testing.assert_array_equal(d.lagged, [[2, 1], [3, 2]])


def test_design_does_not_cross_segments():
    a = np.array([[1.0], [2.0], [3.0]])
    b = np.array([[10.0], [20.0], [30.0]])
    d = build_design([a, b], 1)
    assert d.n_rows == 4
    pairs = set(zip(d.lagged[:, 0], d.current[:, 0]))
    assert pairs == {(1, 2), (2, 3), (10, 20), (20, 30)}
    assert (3.0, 10.0) not in pairs


def test_design_lag0_and_too_large():
    d = build_design([np.ones((4, 3))], 0)
    assert d.lagged.shape == (4, 0)
    with pytest.raises(LagTooLarge):
        build_design([np.ones((3, 2))], 3)


def test_standardize_population_std():
    from cgad.design import LaggedDesign
    d = LaggedDesign(np.array([[1.0], [2.0], [3.0]]), np.array([[5.0], [5.0], [5.0]]), 1)
    out, stats = standardize(d)
    z = 1.0 / np.sqrt(2.0 / 3.0)
    np.testing.assert_allclose(out.current[:, 0], [-z, 0, z])
    assert np.allclose(out.current[:, 0], [-1.2247449, 0, 1.2247449])
    np.testing.assert_array_equal(out.lagged[:, 0], [0, 0, 0])
    assert stats.zero_variance[1].tolist() == [True]


def test_standardize_reuses_stats():
    from cgad.design import LaggedDesign, StandardizationStats
    stats = StandardizationStats(np.array([2.0]), np.array([1.0]), np.zeros(0), np.zeros(0))
    out, _ = standardize(LaggedDesign(np.array([[4.0]]), np.zeros((1, 0)), 0), stats)
    assert out.current[0, 0] == 2.0


def test_pooled_mode_shares_one_scale():
    from cgad.design import LaggedDesign
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 3)) * [1.0, 2.0, 3.0]
    out, stats = standardize(LaggedDesign(x, x[:, :2].copy(), 1), mode="pooled")
    assert len(set(stats.current_std.tolist())) == 1
    assert np.allclose(stats.lagged_std, stats.current_std[0])
    # relative variances survive
    assert np.argsort(out.current.std(0)).tolist() == [0, 1, 2]


@settings(max_examples=50, deadline=None)
@given(t=st.integers(4, 40), m=st.integers(2, 8), p=st.integers(0, 3), seed=st.integers(0, 10**6))
def test_design_properties(t, m, p, seed):
    if t < m or p >= m:
        return
    rng = np.random.default_rng(seed)
    series = validate_series(rng.normal(size=(t, 2)), ["a", "b"])
    seg = segment(series, m)
    n = len(seg)
    np.testing.assert_array_equal(np.vstack(seg.segments), series.values[:n * m])
    d = build_design(seg.segments, p)
    assert d.n_rows == n * (m - p)
    # each block of Y is X shifted back by l within a segment
    for ell in range(1, p + 1):
        for s_idx, s in enumerate(seg.segments):
            rows = slice(s_idx * (m - p), (s_idx + 1) * (m - p))
            np.testing.assert_array_equal(d.lagged[rows, (ell - 1) * 2:ell * 2], s[p - ell:m - ell])
    # shuffling segments permutes whole row blocks
    perm = rng.permutation(n)
    d2 = build_design([seg.segments[i] for i in perm], p)
    for new, old in enumerate(perm):
        np.testing.assert_array_equal(d2.current[new * (m - p):(new + 1) * (m - p)],
                                      d.current[old * (m - p):(old + 1) * (m - p)])
