"""Stimulus-locked epochs of 232 samples (-0.1 s to +0.8 s at 256 Hz)."""
from __future__ import annotations

import csv
import io
import logging
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acquire import CHANNELS, NON_TARGET, SAMPLE_RATE, TARGET, SessionRecording

logger = logging.getLogger(__name__)

PRE = int(round(0.1 * SAMPLE_RATE))    # 26
POST = int(round(0.8 * SAMPLE_RATE))   # 205
EPOCH_LEN = PRE + POST + 1             # 232
LABELS = {NON_TARGET: 0, TARGET: 1}
LABEL_NAMES = {v: k for k, v in LABELS.items()}
EPOCH_HEADER = ("subject_id", "session_id", "epoch_id", "label", "sample_idx") + CHANNELS


class EpochError(ValueError):
    pass


@dataclass(frozen=True)
class Epoch:
    subject_id: int
    session_id: int
    epoch_id: int
    label: str
    data: np.ndarray
    onset_sample: int = -1

    def __post_init__(self):
        if self.data.shape != (len(CHANNELS), EPOCH_LEN):
            raise EpochError(f"epoch data must be {len(CHANNELS)}x{EPOCH_LEN}, got {self.data.shape}")
        if self.label not in LABELS:
            raise EpochError(f"unknown label {self.label!r}")

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.subject_id, self.session_id, self.epoch_id)


def extract_epochs(rec: SessionRecording, baseline: bool = True) -> list[Epoch]:
    """One epoch per marker whose window lies inside the recording.

    Epoch ids are marker positions in the session, so dropped markers leave
    gaps rather than renumbering.
    """
    if not rec.markers:
        raise EpochError(f"session {rec.subject_id}/{rec.session_id} has no markers")
    n = rec.n_samples
    out = []
    for k, m in enumerate(rec.markers):
        lo, hi = m.sample_index - PRE, m.sample_index + POST + 1
        if lo < 0 or hi > n:
            logger.warning("dropping marker %d at sample %d: window [%d, %d) outside [0, %d)",
                           k, m.sample_index, lo, hi, n)
            continue
        ep = Epoch(rec.subject_id, rec.session_id, k, m.kind, rec.samples[:, lo:hi].copy(),
                   m.sample_index)
        out.append(baseline_correct(ep) if baseline else ep)
    return out


def baseline_correct(epoch: Epoch) -> Epoch:
    """Subtract each channel's mean over the 26 pre-stimulus samples."""
    data = epoch.data - epoch.data[:, :PRE].mean(axis=1, keepdims=True)
    return Epoch(epoch.subject_id, epoch.session_id, epoch.epoch_id, epoch.label, data,
                 epoch.onset_sample)


def stack(epochs: list[Epoch]) -> tuple[np.ndarray, np.ndarray]:
    """``(X, y)`` with X shaped (n, 8, 232) and y the 0/1 label codes."""
    if not epochs:
        return np.empty((0, len(CHANNELS), EPOCH_LEN)), np.empty(0, dtype=int)
    return (np.stack([e.data for e in epochs]),
            np.array([LABELS[e.label] for e in epochs]))


def write_epochs_csv(epochs: list[Epoch], path) -> None:
    """Long format: one row per (epoch, sample offset)."""
    path = Path(path)
    offsets = np.arange(-PRE, POST + 1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(EPOCH_HEADER) + "\n")
        for e in epochs:
            prefix = f"{e.subject_id},{e.session_id},{e.epoch_id},{LABELS[e.label]},"
            fh.write("".join(
                prefix + f"{o}," + ",".join(f"{v:.6f}" for v in col) + "\n"
                for o, col in zip(offsets, e.data.T)))


def read_epochs_csv(path) -> list[Epoch]:
    path = Path(path)
    epochs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != EPOCH_HEADER:
            raise EpochError(f"{path}:1: bad header {header!r}")
        cur_key, cur_label, rows, start_line = None, None, [], 2

        def flush():
            if cur_key is None:
                return
            if len(rows) != EPOCH_LEN:
                raise EpochError(f"{path}:{start_line}: epoch {cur_key} has {len(rows)} samples, "
                                 f"expected {EPOCH_LEN}")
            data = np.asarray(rows, dtype=float).T
            epochs.append(Epoch(*cur_key, LABEL_NAMES[cur_label], data))

        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(EPOCH_HEADER):
                raise EpochError(f"{path}:{lineno}: expected {len(EPOCH_HEADER)} columns, got {len(row)}")
            try:
                key = (int(row[0]), int(row[1]), int(row[2]))
                label, offset = int(row[3]), int(row[4])
                values = [float(v) for v in row[5:]]
            except ValueError as exc:
                raise EpochError(f"{path}:{lineno}: malformed row ({exc})") from None
            if label not in LABEL_NAMES:
                raise EpochError(f"{path}:{lineno}: bad label {label}")
            if key != cur_key:
                flush()
                cur_key, cur_label, rows, start_line = key, label, [], lineno
            if offset != -PRE + len(rows):
                raise EpochError(f"{path}:{lineno}: sample_idx {offset} out of sequence "
                                 f"for epoch {key}")
            if label != cur_label:
                raise EpochError(f"{path}:{lineno}: label changes inside epoch {key}")
            rows.append(values)
        flush()
    return epochs


def save_epochs_npz(epochs: list[Epoch], path) -> None:
    """Binary archive of ``epochs`` (lossless, much smaller than the CSV form)."""
    X, y = stack(epochs)
    meta = np.array([(e.subject_id, e.session_id, e.epoch_id, e.onset_sample) for e in epochs],
                    dtype=np.int64).reshape(-1, 4)
    # fixed zip timestamps keep the archive byte-identical across runs
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in (("data", X), ("label", y), ("meta", meta)):
            buf = io.BytesIO()
            np.save(buf, arr, allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)),
                        buf.getvalue())


def load_epochs_npz(path) -> list[Epoch]:
    with np.load(path) as z:
        X, y, meta = z["data"], z["label"], z["meta"]
    return [Epoch(int(m[0]), int(m[1]), int(m[2]), LABEL_NAMES[int(lab)], x, int(m[3]))
            for x, lab, m in zip(X, y, meta)]
