"""Synthetic Oddball sessions with subject-specific P300 responses.

Every generator is a pure function of explicit seeds, so sessions can be
produced in parallel and regenerated bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .acquire import (CHANNELS, NON_TARGET, SAMPLE_RATE, TARGET, SessionRecording,
                      StimulusEvent, session_timestamps)

N_TARGET = 40
N_NONTARGET = 160
IMAGE_DURATION = 1.0
FAMILIARIZATION = 5.0
PRESENTATION_SPAN = 205.0
RECORDING_SPAN = 213.0
N_SAMPLES = math.ceil(RECORDING_SPAN * SAMPLE_RATE)

FRONTAL = (0, 1)
POSTERIOR = (4, 5, 6, 7)
# blink propagation from the eyes towards the back of the head
BLINK_SPREAD = np.array([1.0, 1.0, 0.2, 0.2, 0.05, 0.05, 0.03, 0.03])

# Paul Kellet's economy pinking filter (-10 dB/decade)
_PINK_B = np.array([0.049922035, -0.095993537, 0.050612699, -0.004408786])
_PINK_A = np.array([1.0, -2.494956002, 2.017265875, -0.522189400])


@dataclass(frozen=True)
class SynthConfig:
    """Free difficulty parameters of the simulator (amplitudes in microvolts)."""

    noise_rms: float = 10.0
    line_amplitude: float = 5.0
    line_frequency: float = 50.0
    blink_amplitude: float = 80.0
    blink_duration: float = 0.3
    latency_jitter: float = 0.01
    alpha_amplitude_range: tuple[float, float] = (2.0, 6.0)
    channel_gain_range: tuple[float, float] = (0.6, 1.4)
    blink_rate_range: tuple[float, float] = (8.0, 20.0)


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: int
    p300_latency: float
    p300_amplitude: float
    p300_width: float
    topography: tuple[float, ...]
    alpha_amplitude: float
    alpha_frequency: float
    alpha_topography: tuple[float, ...]
    channel_gains: tuple[float, ...]
    blink_rate: float
    rng_seed: int


@dataclass(frozen=True)
class OddballSchedule:
    stimulus_onsets: tuple[tuple[float, str], ...]
    image_duration: float = IMAGE_DURATION
    total_duration: float = RECORDING_SPAN

    @property
    def n_target(self) -> int:
        return sum(kind == TARGET for _, kind in self.stimulus_onsets)

    @property
    def n_nontarget(self) -> int:
        return sum(kind == NON_TARGET for _, kind in self.stimulus_onsets)


def make_subject_profile(subject_id: int, master_seed: int,
                         config: SynthConfig = SynthConfig()) -> SubjectProfile:
    if subject_id < 0:
        raise ValueError("subject_id must be non-negative")
    rng = np.random.default_rng([master_seed, subject_id, 0x5EED])
    topo = np.empty(len(CHANNELS))
    topo[[0, 1]] = rng.uniform(0.05, 0.3, 2)
    topo[[2, 3]] = rng.uniform(0.3, 0.7, 2)
    topo[list(POSTERIOR)] = rng.uniform(0.7, 1.0, 4)
    alpha_topo = np.empty(len(CHANNELS))
    alpha_topo[[0, 1, 2, 3]] = rng.uniform(0.1, 0.6, 4)
    alpha_topo[list(POSTERIOR)] = rng.uniform(0.4, 1.0, 4)
    return SubjectProfile(
        subject_id=subject_id,
        p300_latency=float(rng.uniform(0.28, 0.42)),
        p300_amplitude=float(rng.uniform(5.0, 15.0)),
        p300_width=float(rng.uniform(0.05, 0.12)),
        topography=tuple(float(v) for v in topo),
        alpha_amplitude=float(rng.uniform(*config.alpha_amplitude_range)),
        alpha_frequency=float(rng.uniform(8.5, 11.5)),
        alpha_topography=tuple(float(v) for v in alpha_topo),
        channel_gains=tuple(float(v) for v in rng.uniform(*config.channel_gain_range, len(CHANNELS))),
        blink_rate=float(rng.uniform(*config.blink_rate_range)),
        rng_seed=int(rng.integers(0, 2**63 - 1)),
    )


def make_schedule(seed: int) -> OddballSchedule:
    """200 one-second images after the 5 s familiarization clip, targets shuffled in."""
    rng = np.random.default_rng([seed, 0x0DDB])
    kinds = np.array([TARGET] * N_TARGET + [NON_TARGET] * N_NONTARGET)
    rng.shuffle(kinds)
    onsets = tuple((FAMILIARIZATION + i * IMAGE_DURATION, str(k)) for i, k in enumerate(kinds))
    return OddballSchedule(onsets)


def pink_noise(rng: np.random.Generator, n_channels: int, n_samples: int) -> np.ndarray:
    """Unit-RMS 1/f noise, one independent row per channel."""
    burn = 2048
    white = rng.standard_normal((n_channels, n_samples + burn))
    pink = lfilter(_PINK_B, _PINK_A, white, axis=1)[:, burn:]
    return pink / pink.std(axis=1, keepdims=True)


def blink_onsets(rng: np.random.Generator, rate_per_min: float, span: float,
                 duration: float) -> np.ndarray:
    if rate_per_min <= 0:
        return np.empty(0)
    n = rng.poisson(rate_per_min * span / 60.0)
    return np.sort(rng.uniform(0.0, span - duration, n))


def generate_session(profile: SubjectProfile, schedule: OddballSchedule, session_id: int,
                     config: SynthConfig = SynthConfig()) -> SessionRecording:
    """Simulate one recording of ``schedule`` for ``profile``.

    The manifest carries the ground truth (blink onsets, injected latency)
    used by the artifact and epoch checks.
    """
    rng = np.random.default_rng([profile.rng_seed, session_id])
    fs = SAMPLE_RATE
    n = math.ceil(schedule.total_duration * fs)
    t = np.arange(n) / fs
    n_ch = len(CHANNELS)

    x = config.noise_rms * np.asarray(profile.channel_gains)[:, None] * pink_noise(rng, n_ch, n)

    phase = rng.uniform(0, 2 * np.pi)
    alpha = profile.alpha_amplitude * np.sin(2 * np.pi * profile.alpha_frequency * t + phase)
    x += np.asarray(profile.alpha_topography)[:, None] * alpha

    line_phase = rng.uniform(0, 2 * np.pi)
    x += config.line_amplitude * np.sin(2 * np.pi * config.line_frequency * t + line_phase)

    blinks = blink_onsets(rng, profile.blink_rate, schedule.total_duration, config.blink_duration)
    blen = int(round(config.blink_duration * fs))
    shape = config.blink_amplitude * np.sin(np.pi * np.arange(blen) / blen)
    blink_train = np.zeros(n)
    for b in blinks:
        i = int(round(b * fs))
        seg = blink_train[i:i + blen]
        seg += shape[:seg.size]
    x += BLINK_SPREAD[:, None] * blink_train

    topo = np.asarray(profile.topography)[:, None]
    markers = []
    half = int(4 * profile.p300_width * fs) + 1
    for onset, kind in schedule.stimulus_onsets:
        idx = int(round(onset * fs))
        markers.append(StimulusEvent(idx, kind))
        if kind != TARGET or profile.p300_amplitude == 0:
            continue
        center = onset + profile.p300_latency + rng.normal(0.0, config.latency_jitter)
        c = int(round(center * fs))
        lo, hi = max(c - half, 0), min(c + half, n)
        bump = np.exp(-0.5 * ((t[lo:hi] - center) / profile.p300_width) ** 2)
        x[:, lo:hi] += profile.p300_amplitude * topo * bump

    manifest = {
        "synthetic": True,
        "blink_onsets_s": [float(b) for b in blinks],
        "blink_duration_s": config.blink_duration,
        "blink_train": blink_train,
        "p300_latency_s": profile.p300_latency,
    }
    return SessionRecording(profile.subject_id, session_id, session_timestamps(n, fs), x,
                            markers, manifest=manifest)


def session_seed(master_seed: int, subject_id: int, session_id: int) -> int:
    return int(np.random.SeedSequence([master_seed, subject_id, session_id]).generate_state(1)[0])


def synth_corpus(n_subjects: int, n_sessions: int, master_seed: int,
                 config: SynthConfig = SynthConfig()):
    """Yield ``(profile, recording)`` for every subject and session in order."""
    for s in range(n_subjects):
        profile = make_subject_profile(s, master_seed, config)
        for r in range(n_sessions):
            schedule = make_schedule(session_seed(master_seed, s, r))
            yield profile, generate_session(profile, schedule, r, config)


def without_blinks(profile: SubjectProfile) -> SubjectProfile:
    return replace(profile, blink_rate=0.0)
