"""Binary (per-subject) and multiclass authentication datasets."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .epochs import TARGET, Epoch, stack
from .features import FeatureBlock, sliding_stats_array

EPOCHS = "epochs"
STATISTICS = "statistics"
MULTICLASS_SCOPE = 0xFFFF  # seed scope distinct from any subject id


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    """Labelled samples plus a provenance manifest.

    ``X`` is (n, 8, 232) in epoch mode and (n, 48) in statistics mode;
    ``ids`` holds one hashable identity per sample.
    """

    mode: str
    X: np.ndarray
    y: np.ndarray
    manifest: dict
    ids: list = field(default_factory=list)
    epochs: list[Epoch] | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.X) != len(self.y):
            raise DatasetError(f"X has {len(self.X)} rows but y has {len(self.y)}")
        if self.ids and len(self.ids) != len(self.y):
            raise DatasetError("ids must align with y")

    @property
    def n(self) -> int:
        return len(self.y)

    def counts(self) -> dict[int, int]:
        labels, counts = np.unique(self.y, return_counts=True)
        return {int(k): int(v) for k, v in zip(labels, counts)}

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        ids = [self.ids[i] for i in idx] if self.ids else []
        eps = [self.epochs[i] for i in idx] if self.epochs is not None else None
        man = dict(self.manifest, counts={str(k): v for k, v in
                                          _counts(self.y[idx]).items()})
        return Dataset(self.mode, self.X[idx], self.y[idx], man, ids, eps)


def _counts(y) -> dict[int, int]:
    labels, counts = np.unique(y, return_counts=True)
    return {int(k): int(v) for k, v in zip(labels, counts)}


def replicate_seed(master_seed: int, scope: int, replicate: int) -> int:
    return int(np.random.SeedSequence([master_seed, scope, replicate]).generate_state(1)[0])


def _targets(epochs: list[Epoch]) -> list[Epoch]:
    return sorted((e for e in epochs if e.label == TARGET), key=lambda e: e.key)


def _sample(rng: np.random.Generator, items: list, k: int) -> list:
    idx = np.sort(rng.choice(len(items), size=k, replace=False))
    return [items[i] for i in idx]


def _epoch_dataset(blocks: list[tuple[int, list[Epoch]]], manifest: dict) -> Dataset:
    eps, labels = [], []
    for label, block in blocks:
        eps.extend(block)
        labels.extend([label] * len(block))
    X, _ = stack(eps)
    y = np.asarray(labels, dtype=int)
    manifest["counts"] = {str(k): v for k, v in _counts(y).items()}
    manifest["sources"] = sorted({f"s{e.subject_id:02d}_r{e.session_id:02d}" for e in eps})
    return Dataset("epochs", X, y, manifest, [e.key for e in eps], eps)


def build_binary(legit_subject: int, epochs_by_subject: dict[int, list[Epoch]],
                 replicate: int, seed: int) -> Dataset:
    """Legitimate subject's target epochs (label 1) against an equal number of imposter ones.

    With n legitimate epochs and m imposters, each imposter contributes
    ``n // m`` epochs and the first ``n % m`` imposters (by id) one more.
    ``seed`` is the master seed; the replicate seed is derived from it.
    """
    if legit_subject not in epochs_by_subject:
        raise DatasetError(f"unknown subject {legit_subject}")
    legit = _targets(epochs_by_subject[legit_subject])
    imposters = sorted(s for s in epochs_by_subject if s != legit_subject)
    if not imposters:
        raise DatasetError("binary datasets need at least one imposter subject")
    n = len(legit)
    if n < len(imposters):
        raise DatasetError(f"subject {legit_subject} has only {n} target epochs, "
                           f"fewer than the {len(imposters)} imposters")
    q, r = divmod(n, len(imposters))
    rseed = replicate_seed(seed, legit_subject, replicate)
    rng = np.random.default_rng(rseed)
    negatives = []
    for k, s in enumerate(imposters):
        want = q + (1 if k < r else 0)
        pool = _targets(epochs_by_subject[s])
        if len(pool) < want:
            raise DatasetError(f"imposter subject {s} has {len(pool)} target epochs, needs {want}")
        negatives.extend(_sample(rng, pool, want))
    manifest = {"mode": "epochs", "scope": f"binary:{legit_subject}", "replicate": replicate,
                "seed": rseed, "window": None}
    return _epoch_dataset([(1, legit), (0, negatives)], manifest)


def build_multiclass(epochs_by_subject: dict[int, list[Epoch]], replicate: int,
                     seed: int) -> Dataset:
    """Every subject contributes the same number of target epochs, labelled by subject id."""
    subjects = sorted(epochs_by_subject)
    if len(subjects) < 2:
        raise DatasetError("multiclass datasets need at least two subjects")
    pools = {s: _targets(epochs_by_subject[s]) for s in subjects}
    for s, pool in pools.items():
        if not pool:
            raise DatasetError(f"subject {s} has no target epochs")
    m = min(len(p) for p in pools.values())
    rseed = replicate_seed(seed, MULTICLASS_SCOPE, replicate)
    rng = np.random.default_rng(rseed)
    blocks = []
    for s in subjects:
        pool = pools[s]
        blocks.append((s, pool if len(pool) == m else _sample(rng, pool, m)))
    manifest = {"mode": "epochs", "scope": "multiclass", "replicate": replicate,
                "seed": rseed, "window": None}
    return _epoch_dataset(blocks, manifest)


def to_statistics(ds: Dataset, window: int, stride: int = 1) -> Dataset:
    """Sliding statistics over each label-homogeneous block of ``ds``'s epochs."""
    if ds.mode != EPOCHS:
        raise DatasetError("to_statistics needs an epoch-mode dataset")
    if ds.n == 0:
        raise DatasetError("cannot derive statistics from an empty dataset")
    Xs, ys, ids = [], [], []
    for label in sorted(set(ds.y.tolist())):
        idx = np.flatnonzero(ds.y == label)
        if idx.size == 0:
            raise DatasetError(f"empty block for label {label}")
        block = FeatureBlock(int(label), np.concatenate([ds.X[i].T for i in idx], axis=0))
        vals = sliding_stats_array(block.rows, window, stride)
        Xs.append(vals)
        ys.append(np.full(len(vals), label, dtype=int))
        ids.extend((int(label), s) for s in range(0, len(vals) * stride, stride))
    y = np.concatenate(ys)
    manifest = dict(ds.manifest, mode="statistics", window=window, stride=stride,
                    counts={str(k): v for k, v in _counts(y).items()},
                    epoch_counts=ds.manifest.get("counts"))
    return Dataset(STATISTICS, np.concatenate(Xs), y, manifest, ids)


def train_test_split(ds: Dataset, test_fraction: float = 0.2, seed: int = 0,
                     min_class: int = 5) -> tuple[Dataset, Dataset]:
    """Stratified split: each class sends ``round(test_fraction * count)`` samples to test."""
    rng = np.random.default_rng(seed)
    test_idx = []
    for label, count in _counts(ds.y).items():
        if count < min_class:
            raise DatasetError(f"class {label} has {count} samples; at least {min_class} required")
        idx = np.flatnonzero(ds.y == label)
        k = int(np.floor(test_fraction * count + 0.5))
        test_idx.append(rng.permutation(idx)[:k])
    test = np.sort(np.concatenate(test_idx))
    train = np.setdiff1d(np.arange(ds.n), test)
    return ds.subset(train), ds.subset(test)


def manifest_json(ds: Dataset) -> str:
    return json.dumps(ds.manifest, sort_keys=True, indent=2) + "\n"


def save_dataset(ds: Dataset, path_stem) -> tuple[Path, Path]:
    """Write ``<stem>.npz`` and ``<stem>.json`` (manifest), each atomically."""
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data_path, man_path = stem.with_suffix(".npz"), stem.with_suffix(".json")
    _atomic_write(data_path, lambda fh: np.savez(fh, X=ds.X, y=ds.y,
                                                 ids=np.asarray(ds.ids, dtype=np.int64)),
                  binary=True)
    _atomic_write(man_path, lambda fh: fh.write(manifest_json(ds)))
    return data_path, man_path


def load_dataset(path_stem) -> Dataset:
    stem = Path(path_stem)
    with np.load(stem.with_suffix(".npz")) as z:
        X, y, ids = z["X"], z["y"], [tuple(int(v) for v in row) for row in z["ids"]]
    manifest = json.loads(stem.with_suffix(".json").read_text())
    return Dataset(manifest["mode"], X, y, manifest, ids)


def _atomic_write(path: Path, writer, binary: bool = False) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb" if binary else "w") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
