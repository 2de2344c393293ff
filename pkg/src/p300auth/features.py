"""Sliding-window statistics over concatenated epoch samples."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .acquire import CHANNELS
from .epochs import EPOCH_LEN, Epoch

STATS = ("mean", "var", "std", "max", "sum", "median")
WINDOWS = (58, 116, 174, 232)
N_FEATURES = len(STATS) * len(CHANNELS)
FEATURE_NAMES = tuple(f"{s}_{ch}" for ch in CHANNELS for s in STATS)
FEATURE_HEADER = ("subject_id", "label", "window_start") + FEATURE_NAMES


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: int
    subject_id: int
    window_start: int


@dataclass
class FeatureBlock:
    """Label-homogeneous rows: epochs concatenated along time, (B, 8)."""

    label: int
    rows: np.ndarray
    subject_id: int = -1
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise FeatureError("block rows must be a 2-D (samples, channels) array")

    @classmethod
    def from_epochs(cls, epochs: list[Epoch], label: int, subject_id: int = -1) -> FeatureBlock:
        if not epochs:
            raise FeatureError("cannot build a block from zero epochs")
        rows = np.concatenate([e.data.T for e in epochs], axis=0)
        return cls(label, rows, subject_id, [e.key for e in epochs])

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def window_count(n_rows: int, window: int, stride: int = 1) -> int:
    return (n_rows - window) // stride + 1


def sliding_stats_array(rows: np.ndarray, window: int, stride: int = 1,
                        chunk: int = 2048) -> np.ndarray:
    """Statistics matrix of shape (n_windows, 6 * n_channels), channel-major.

    Variance is the population variance, computed in two passes.
    """
    rows = np.asarray(rows, dtype=float)
    b, n_ch = rows.shape
    if window < 1 or stride < 1:
        raise FeatureError("window and stride must be >= 1")
    if window > b:
        raise FeatureError(f"window {window} exceeds block length {b}")
    views = sliding_window_view(rows, window, axis=0)[::stride]  # (n_win, n_ch, W)
    n_win = views.shape[0]
    out = np.empty((n_win, n_ch, len(STATS)))
    for lo in range(0, n_win, chunk):
        w = views[lo:lo + chunk]
        s = w.sum(axis=-1)
        mean = s / window
        var = ((w - mean[..., None]) ** 2).sum(axis=-1) / window
        o = out[lo:lo + chunk]
        o[..., 0] = mean
        o[..., 1] = var
        o[..., 2] = np.sqrt(var)
        o[..., 3] = w.max(axis=-1)
        o[..., 4] = s
        o[..., 5] = np.median(w, axis=-1)
    return out.reshape(n_win, n_ch * len(STATS))


def sliding_stats(block: FeatureBlock, window: int, stride: int = 1) -> list[FeatureVector]:
    """Feature vectors for windows starting at 0, stride, 2*stride, ..."""
    values = sliding_stats_array(block.rows, window, stride)
    starts = range(0, values.shape[0] * stride, stride)
    return [FeatureVector(v, block.label, block.subject_id, s) for v, s in zip(values, starts)]


def write_features_csv(vectors: list[FeatureVector], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(FEATURE_HEADER) + "\n")
        for v in vectors:
            fh.write(f"{v.subject_id},{v.label},{v.window_start},"
                     + ",".join(repr(float(x)) for x in v.values) + "\n")


def read_features_csv(path) -> list[FeatureVector]:
    path = Path(path)
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FEATURE_HEADER:
            raise FeatureError(f"{path}:1: bad header")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(FEATURE_HEADER):
                raise FeatureError(f"{path}:{lineno}: expected {len(FEATURE_HEADER)} columns, "
                                   f"got {len(row)}")
            try:
                out.append(FeatureVector(np.array([float(x) for x in row[3:]]),
                                         int(row[1]), int(row[0]), int(row[2])))
            except ValueError as exc:
                raise FeatureError(f"{path}:{lineno}: malformed row ({exc})") from None
    return out


def epochs_per_block(n_rows: int) -> int:
    if n_rows % EPOCH_LEN:
        raise FeatureError(f"block of {n_rows} rows is not a whole number of epochs")
    return n_rows // EPOCH_LEN
