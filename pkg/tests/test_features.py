import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from p300auth.acquire import TARGET
from p300auth.epochs import Epoch
from p300auth.features import (FEATURE_HEADER, N_FEATURES, STATS, WINDOWS, FeatureBlock,
                               FeatureError, read_features_csv, sliding_stats, sliding_stats_array,
                               window_count, write_features_csv)


def two_pass(window: np.ndarray) -> np.ndarray:
    """Reference statistics of one (W, C) window, channel-major."""
    out = []
    for col in window.T:
        mean = sum(col) / len(col)
        var = sum((v - mean) ** 2 for v in col) / len(col)
        out += [mean, var, var ** 0.5, max(col), sum(col), float(np.median(col))]
    return np.array(out)


def test_layout_constants():
    assert N_FEATURES == 48
    assert STATS == ("mean", "var", "std", "max", "sum", "median")
    assert len(FEATURE_HEADER) == 51
    assert FEATURE_HEADER[:4] == ("subject_id", "label", "window_start", "mean_Fp1")
    assert FEATURE_HEADER[-1] == "median_O2"
    assert WINDOWS == (58, 116, 174, 232)


def test_single_channel_example():
    rows = np.array([[1.0], [2.0], [3.0], [4.0]])
    vals = sliding_stats_array(rows, 2, 1)
    assert vals.shape == (3, 6)
    np.testing.assert_allclose(vals[0], [1.5, 0.25, 0.5, 2, 3, 1.5])


@pytest.mark.parametrize("w", WINDOWS)
def test_constant_block(w):
    block = FeatureBlock(1, np.full((464, 8), -3.25))
    v = sliding_stats(block, w, 50)[0].values.reshape(8, 6)
    np.testing.assert_allclose(v, np.tile([-3.25, 0, 0, -3.25, -3.25 * w, -3.25], (8, 1)),
                               atol=1e-12)


def test_single_window_for_full_block():
    block = FeatureBlock(0, np.random.default_rng(0).normal(size=(232, 8)))
    assert len(sliding_stats(block, 232, 1)) == 1


def test_vectors_carry_metadata():
    block = FeatureBlock(1, np.zeros((300, 8)), subject_id=4)
    vecs = sliding_stats(block, 58, 20)
    assert [v.window_start for v in vecs[:3]] == [0, 20, 40]
    assert all(v.label == 1 and v.subject_id == 4 for v in vecs)


def test_window_larger_than_block():
    with pytest.raises(FeatureError):
        sliding_stats(FeatureBlock(0, np.zeros((57, 8))), 58)


def test_from_epochs_concatenates_in_time():
    eps = [Epoch(0, 0, i, TARGET, np.full((8, 232), float(i))) for i in range(3)]
    block = FeatureBlock.from_epochs(eps, 1, 0)
    assert block.rows.shape == (696, 8)
    assert block.rows[231, 0] == 0 and block.rows[232, 0] == 1
    assert block.provenance == [(0, 0, 0), (0, 0, 1), (0, 0, 2)]
    with pytest.raises(FeatureError):
        FeatureBlock.from_epochs([], 1)


@given(st.integers(1, 3000), st.sampled_from(WINDOWS), st.integers(1, 300))
def test_window_count_formula(b, w, stride):
    if w > b:
        return
    rows = np.zeros((b, 1))
    assert len(sliding_stats_array(rows, w, stride)) == window_count(b, w, stride) \
        == (b - w) // stride + 1


blocks = hnp.arrays(np.float64, st.tuples(st.integers(8, 40), st.integers(1, 3)),
                    elements=st.floats(-1e3, 1e3, allow_nan=False))


@given(blocks, st.data())
def test_matches_two_pass_oracle(rows, data):
    w = data.draw(st.integers(1, rows.shape[0]))
    stride = data.draw(st.integers(1, 5))
    vals = sliding_stats_array(rows, w, stride)
    for k, v in enumerate(vals):
        ref = two_pass(rows[k * stride:k * stride + w])
        np.testing.assert_allclose(v, ref, rtol=1e-10, atol=1e-9)


@given(blocks, st.data())
def test_order_relations(rows, data):
    w = data.draw(st.integers(1, rows.shape[0]))
    v = sliding_stats_array(rows, w, 1).reshape(-1, rows.shape[1], 6)
    mean, var, std, mx, total, med = np.moveaxis(v, -1, 0)
    lo = np.min(np.lib.stride_tricks.sliding_window_view(rows, w, axis=0), axis=-1)
    tol = 1e-9 * (1 + np.abs(rows).max())
    assert np.all(lo - tol <= med) and np.all(med <= mx + tol)
    assert np.all(mx >= mean - tol)
    np.testing.assert_allclose(std ** 2, var, atol=1e-9 * (1 + var.max()))
    np.testing.assert_allclose(total, mean * w, rtol=1e-9, atol=1e-9)


@given(blocks, st.floats(0.1, 10))
def test_homogeneity(rows, c):
    w = max(1, rows.shape[0] // 2)
    a = sliding_stats_array(rows, w).reshape(-1, rows.shape[1], 6)
    b = sliding_stats_array(c * rows, w).reshape(-1, rows.shape[1], 6)
    scale = 1 + np.abs(a).max()
    for k in (0, 2, 3, 4, 5):
        np.testing.assert_allclose(b[..., k], c * a[..., k], atol=1e-9 * c * scale * w)
    np.testing.assert_allclose(b[..., 1], c * c * a[..., 1], atol=1e-9 * c * c * scale ** 2)


def test_csv_round_trip(tmp_path):
    block = FeatureBlock(1, np.random.default_rng(3).normal(size=(300, 8)) * 20, subject_id=2)
    vecs = sliding_stats(block, 116, 17)
    path = tmp_path / "f.csv"
    write_features_csv(vecs, path)
    back = read_features_csv(path)
    assert len(back) == len(vecs)
    for a, b in zip(vecs, back):
        np.testing.assert_array_equal(a.values, b.values)
        assert (a.label, a.subject_id, a.window_start) == (b.label, b.subject_id, b.window_start)


def test_empty_csv_is_header_only(tmp_path):
    path = tmp_path / "f.csv"
    write_features_csv([], path)
    assert path.read_text() == ",".join(FEATURE_HEADER) + "\n"
    assert read_features_csv(path) == []


def test_wrong_column_count(tmp_path):
    path = tmp_path / "f.csv"
    write_features_csv(sliding_stats(FeatureBlock(0, np.ones((60, 8))), 58), path)
    path.write_text(path.read_text().rstrip("\n") + ",9\n")
    with pytest.raises(FeatureError, match=":4: expected 51 columns"):
        read_features_csv(path)
