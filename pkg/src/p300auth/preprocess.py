"""Per-session preprocessing: notch + band-pass, optional ICA blink removal, epoching."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .acquire import TARGET, SessionRecording
from .dsp import apply_zero_phase, preprocess_filter
from .epochs import Epoch, extract_epochs
from .ica import clean_blinks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PreprocessConfig:
    notch_hz: float | None = 50.0
    notch_q: float = 30.0
    band: tuple[float, float] = (1.0, 17.0)
    order: int = 6
    ica: bool = False
    ica_threshold: float = 0.7
    baseline: bool = True

    def filter(self, fs: float):
        return preprocess_filter(fs, self.notch_hz, self.notch_q, self.band, self.order)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["band"] = list(self.band)
        return d


def ica_seed(rec: SessionRecording) -> int:
    return int(np.random.SeedSequence([rec.subject_id, rec.session_id, 0x1CA]).generate_state(1)[0])


def preprocess_session(rec: SessionRecording, config: PreprocessConfig = PreprocessConfig(),
                       filt=None) -> SessionRecording:
    """Filtered (and optionally blink-cleaned) copy of ``rec``.

    The manifest gains ``preprocess`` (the settings) and, with ICA,
    ``ica_removed`` (flagged component indices) and ``ica_converged``.
    """
    filt = filt or config.filter(rec.sample_rate)
    x = apply_zero_phase(filt, rec.samples)
    extra = {"preprocess": config.as_dict()}
    if config.ica:
        x, model, flagged = clean_blinks(x, seed=ica_seed(rec), threshold=config.ica_threshold)
        extra.update(ica_removed=flagged, ica_converged=model.converged)
        if not flagged:
            logger.info("session s%02d_r%02d: no component above |r| = %.2f",
                        rec.subject_id, rec.session_id, config.ica_threshold)
    return rec.with_samples(x, **extra)


def session_epochs(rec: SessionRecording, config: PreprocessConfig = PreprocessConfig(),
                   filt=None) -> list[Epoch]:
    return extract_epochs(preprocess_session(rec, config, filt), baseline=config.baseline)


def corpus_epochs(recordings, config: PreprocessConfig = PreprocessConfig(),
                  targets_only: bool = False) -> dict[int, list[Epoch]]:
    """Epochs of every recording grouped by subject, in input order.

    ``recordings`` may be a generator; with ``targets_only`` the non-target
    epochs are dropped as soon as they are cut, which is all the dataset
    builders need and about a fifth of the memory.
    """
    out: dict[int, list[Epoch]] = {}
    filters = {}
    for rec in recordings:
        if rec.sample_rate not in filters:
            filters[rec.sample_rate] = config.filter(rec.sample_rate)
        eps = session_epochs(rec, config, filters[rec.sample_rate])
        if targets_only:
            eps = [e for e in eps if e.label == TARGET]
        out.setdefault(rec.subject_id, []).extend(eps)
    return out
