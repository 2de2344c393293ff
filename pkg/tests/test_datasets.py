import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from p300auth.acquire import NON_TARGET, TARGET
from p300auth.datasets import (DatasetError, build_binary, build_multiclass, load_dataset,
                               manifest_json, save_dataset, to_statistics, train_test_split)
from p300auth.epochs import Epoch

_ZERO = np.zeros((8, 232))


def corpus(counts, non_targets=3):
    """``{subject: epochs}`` with ``counts[s]`` target epochs each."""
    out = {}
    for s, n in counts.items():
        eps = [Epoch(s, k // 40, k, TARGET, _ZERO + s + k / 1e4) for k in range(n)]
        eps += [Epoch(s, 99, 10_000 + k, NON_TARGET, _ZERO - 1) for k in range(non_targets)]
        out[s] = eps
    return out


def test_exact_division():
    ds = build_binary(0, corpus({s: 900 for s in range(10)}), 0, 0)
    assert ds.counts() == {0: 900, 1: 900}
    imposters = [k[0] for k, lab in zip(ds.ids, ds.y) if lab == 0]
    assert np.bincount(imposters)[1:].tolist() == [100] * 9


def test_remainder_goes_to_first_imposters():
    ds = build_binary(4, corpus({s: 800 for s in range(10)}), 0, 0)
    imposters = [k[0] for k, lab in zip(ds.ids, ds.y) if lab == 0]
    per = {s: imposters.count(s) for s in sorted(set(imposters))}
    assert per == {0: 89, 1: 89, 2: 89, 3: 89, 5: 89, 6: 89, 7: 89, 8: 89, 9: 88}
    assert 9 * 88 + 8 == sum(per.values()) == 800


def test_non_targets_never_used():
    ds = build_binary(0, corpus({s: 20 for s in range(3)}, non_targets=50), 0, 0)
    assert all(e.label == TARGET for e in ds.epochs)


@given(st.integers(9, 60), st.integers(0, 4), st.integers(0, 2**32))
def test_binary_is_balanced_and_unique(n, replicate, seed):
    counts = {s: n if s == 0 else n // 9 + 3 for s in range(10)}
    ds = build_binary(0, corpus(counts, 0), replicate, seed)
    assert ds.counts() == {0: n, 1: n}
    assert len(set(ds.ids)) == ds.n
    assert ds.X.shape == (2 * n, 8, 232)


def test_imposter_shortage_names_subject():
    counts = {s: 90 for s in range(10)}
    counts[6] = 5
    with pytest.raises(DatasetError, match="imposter subject 6"):
        build_binary(0, corpus(counts), 0, 0)


def test_replicates_differ_and_repeat():
    eps = corpus({s: 100 for s in range(10)})
    a, b = build_binary(0, eps, 0, 0), build_binary(0, eps, 1, 0)
    assert a.ids != b.ids
    assert manifest_json(a) == manifest_json(build_binary(0, eps, 0, 0))
    assert build_binary(0, eps, 0, 0).ids == a.ids


def test_fifty_binary_datasets():
    eps = corpus({s: 30 for s in range(10)})
    dss = [build_binary(s, eps, r, 0) for s in range(10) for r in range(5)]
    assert len(dss) == 50
    assert len({manifest_json(d) for d in dss}) == 50


def test_multiclass_min_rule():
    counts = {s: 800 for s in range(10)}
    counts[2] = 795
    ds = build_multiclass(corpus(counts), 0, 0)
    assert ds.counts() == {s: 795 for s in range(10)}
    assert len(set(ds.ids)) == ds.n


def test_multiclass_equal_counts_is_concatenation():
    eps = corpus({s: 12 for s in range(4)})
    ds = build_multiclass(eps, 3, 0)
    assert ds.ids == [e.key for s in range(4) for e in eps[s] if e.label == TARGET]
    assert ds.y.tolist() == [s for s in range(4) for _ in range(12)]


def test_multiclass_errors_and_replicates():
    with pytest.raises(DatasetError, match="subject 1"):
        build_multiclass(corpus({0: 5, 1: 0}), 0, 0)
    eps = corpus({0: 30, 1: 20, 2: 25})
    reps = [build_multiclass(eps, r, 0) for r in range(5)]
    assert len({tuple(d.ids) for d in reps}) > 1


def test_statistics_counts():
    ds = build_binary(0, corpus({s: 18 for s in range(10)}), 0, 0)
    st232 = to_statistics(ds, 232, 1)
    assert st232.counts() == {0: 18 * 232 - 231, 1: 18 * 232 - 231}
    assert st232.X.shape[1] == 48
    assert st232.manifest["window"] == 232 and st232.manifest["mode"] == "statistics"
    assert to_statistics(ds, 58).n > st232.n


def test_statistics_count_for_full_legit_block():
    # 800 legit epochs, window 232, stride 1
    assert 800 * 232 - 232 + 1 == 185_369


def test_statistics_errors():
    ds = build_binary(0, corpus({s: 18 for s in range(10)}), 0, 0)
    with pytest.raises(DatasetError):
        to_statistics(ds.subset([]), 58)
    with pytest.raises(DatasetError):
        to_statistics(to_statistics(ds, 58), 58)


def test_split_1000_balanced():
    ds = build_binary(0, corpus({s: 500 for s in range(10)}), 0, 0)
    tr, te = train_test_split(ds, seed=1)
    assert (tr.n, te.n) == (800, 200)
    assert te.counts() == {0: 100, 1: 100}
    assert not set(tr.ids) & set(te.ids)
    tr2, te2 = train_test_split(ds, seed=1)
    assert te2.ids == te.ids


@given(st.lists(st.integers(5, 80), min_size=2, max_size=6), st.integers(0, 1000))
def test_split_is_stratified(sizes, seed):
    from p300auth.datasets import Dataset
    y = np.repeat(np.arange(len(sizes)), sizes)
    ds = Dataset("statistics", np.zeros((len(y), 48)), y, {}, list(range(len(y))))
    tr, te = train_test_split(ds, seed=seed)
    for label, size in enumerate(sizes):
        k = te.counts().get(label, 0)
        assert k == int(np.floor(0.2 * size + 0.5))
        assert tr.counts()[label] == size - k
    assert sorted(tr.ids + te.ids) == list(range(len(y)))


def test_split_rejects_tiny_class():
    from p300auth.datasets import Dataset
    ds = Dataset("statistics", np.zeros((13, 48)), np.array([0] * 10 + [1] * 3), {})
    with pytest.raises(DatasetError, match="class 1 has 3"):
        train_test_split(ds)


def test_save_and_load(tmp_path):
    ds = to_statistics(build_binary(0, corpus({s: 18 for s in range(10)}), 2, 7), 116, 10)
    save_dataset(ds, tmp_path / "d")
    back = load_dataset(tmp_path / "d")
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)
    assert back.ids == [tuple(i) for i in ds.ids]
    assert (tmp_path / "d.json").read_text() == manifest_json(ds)
    assert back.manifest["replicate"] == 2


def test_manifest_fields():
    ds = build_binary(3, corpus({s: 18 for s in range(10)}), 1, 0)
    m = ds.manifest
    assert set(m) >= {"mode", "scope", "replicate", "seed", "window", "counts", "sources"}
    assert m["scope"] == "binary:3" and m["counts"] == {"0": 18, "1": 18}
