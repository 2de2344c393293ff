"""IIR filter design (Butterworth band-pass, notch) and zero-phase application."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import sosfilt, sosfilt_zi


class FilterDesignError(ValueError):
    pass


@dataclass(frozen=True)
class BiquadCascade:
    """Second-order sections, one ``(b0, b1, b2, a1, a2)`` row each (a0 = 1)."""

    sections: np.ndarray
    sample_rate: float
    description: str = ""

    def __post_init__(self):
        sec = np.atleast_2d(np.asarray(self.sections, dtype=float))
        if sec.shape[1] != 5:
            raise FilterDesignError("sections must have 5 coefficients each")
        object.__setattr__(self, "sections", sec)

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    @property
    def sos(self) -> np.ndarray:
        """Sections in the six-column ``[b0 b1 b2 1 a1 a2]`` layout."""
        s = self.sections
        return np.column_stack([s[:, :3], np.ones(len(s)), s[:, 3:]])

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots([1.0, a1, a2]) for a1, a2 in self.sections[:, 3:]])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def then(self, other: BiquadCascade) -> BiquadCascade:
        if other.sample_rate != self.sample_rate:
            raise FilterDesignError("cannot chain filters with different sample rates")
        return BiquadCascade(np.vstack([self.sections, other.sections]), self.sample_rate,
                             f"{self.description} -> {other.description}")


def frequency_response(filt: BiquadCascade, freqs_hz) -> np.ndarray:
    """Complex gain of the cascade evaluated on the unit circle."""
    f = np.asarray(freqs_hz, dtype=float)
    zinv = np.exp(-2j * np.pi * f / filt.sample_rate)
    h = np.ones_like(zinv)
    for b0, b1, b2, a1, a2 in filt.sections:
        h = h * (b0 + b1 * zinv + b2 * zinv**2) / (1.0 + a1 * zinv + a2 * zinv**2)
    return h


def _pair_conjugates(roots: np.ndarray) -> list[tuple[complex, complex]]:
    tol = 1e-9
    upper = sorted((r for r in roots if r.imag > tol), key=lambda r: abs(r.imag))
    real = sorted(r.real for r in roots if abs(r.imag) <= tol)
    pairs = [(r, r.conjugate()) for r in upper]
    if len(real) % 2:
        real.append(0.0)
    pairs += [(complex(real[i]), complex(real[i + 1])) for i in range(0, len(real), 2)]
    return pairs


def design_butterworth_bandpass(prototype_order: int, low_hz: float, high_hz: float,
                                fs: float) -> BiquadCascade:
    """Butterworth band-pass through the prewarped bilinear transform.

    A prototype of order N produces 2N poles, i.e. N biquads, each with one
    zero at DC and one at Nyquist.  Every section is scaled to unit gain at the
    band centre, where the ideal Butterworth response is exactly 1.
    """
    if prototype_order < 1:
        raise FilterDesignError("prototype_order must be >= 1")
    if not 0 < low_hz < high_hz < fs / 2:
        raise FilterDesignError(f"need 0 < low < high < fs/2, got {low_hz}, {high_hz}, fs={fs}")
    n = prototype_order
    k = 2.0 * fs
    wl = k * np.tan(np.pi * low_hz / fs)
    wh = k * np.tan(np.pi * high_hz / fs)
    bw, w0 = wh - wl, np.sqrt(wl * wh)

    proto = np.exp(1j * np.pi * (2 * np.arange(n) + n + 1) / (2 * n))
    half = proto * bw / 2
    disc = np.sqrt(half**2 - w0**2 + 0j)
    s_poles = np.concatenate([half + disc, half - disc])
    z_poles = (k + s_poles) / (k - s_poles)

    center = np.exp(1j * 2 * np.arctan(w0 / k))
    sections = []
    for p1, p2 in _pair_conjugates(z_poles):
        a1 = float(-(p1 + p2).real)
        a2 = float((p1 * p2).real)
        num = (1 - center**-2)
        den = 1 + a1 / center + a2 / center**2
        g = 1.0 / abs(num / den)
        sections.append([g, 0.0, -g, a1, a2])
    return BiquadCascade(np.array(sections), fs,
                         f"butterworth bandpass order {n} {low_hz}-{high_hz} Hz")


def design_notch(f0: float, q: float, fs: float) -> BiquadCascade:
    """Second-order notch with zeros on the unit circle at ``f0``.

    Unity gain at DC and Nyquist; the -3 dB bandwidth is ``f0 / q``.
    """
    if not 0 < f0 < fs / 2:
        raise FilterDesignError(f"notch frequency must lie in (0, {fs / 2}), got {f0}")
    if q <= 0:
        raise FilterDesignError("q must be positive")
    w0 = 2 * np.pi * f0 / fs
    bw = w0 / q
    g = 1.0 / (1.0 + np.tan(bw / 2))
    c = np.cos(w0)
    sec = [g, -2 * g * c, g, -2 * g * c, 2 * g - 1]
    return BiquadCascade(np.array([sec]), fs, f"notch {f0} Hz Q={q}")


def padlen(filt: BiquadCascade) -> int:
    """Reflection length: three times the cascade's filter length."""
    return 3 * (2 * filt.n_sections + 1)


def _forward_backward(sos, zi, flat):
    y = sosfilt(sos, flat, axis=-1, zi=zi[:, None, :] * flat[None, :, :1])[0]
    y = y[:, ::-1]
    y = sosfilt(sos, y, axis=-1, zi=zi[:, None, :] * y[None, :, :1])[0]
    return y[:, ::-1]


def apply_zero_phase(filt: BiquadCascade, signal) -> np.ndarray:
    """Zero-phase application of ``filt`` along the last axis.

    Edges are extended by odd reflection and every pass starts from the
    steady state of its first sample.  The forward-backward and
    backward-forward results are averaged, so the output of a time-reversed
    signal is exactly the time-reversed output.  The effective response is
    |H|^2 with zero phase.
    """
    x = np.asarray(signal, dtype=float)
    n = x.shape[-1]
    if n <= 3 * filt.n_sections:
        raise ValueError(f"signal of {n} samples too short for {filt.n_sections} sections")
    pad = min(padlen(filt), n - 1)
    left = 2 * x[..., :1] - x[..., pad:0:-1]
    right = 2 * x[..., -1:] - x[..., -2:-pad - 2:-1]
    ext = np.concatenate([left, x, right], axis=-1)

    sos = filt.sos
    zi = sosfilt_zi(sos)  # (n_sections, 2)
    flat = ext.reshape(-1, ext.shape[-1])
    fb = _forward_backward(sos, zi, flat)
    bf = _forward_backward(sos, zi, flat[:, ::-1])[:, ::-1]
    y = (0.5 * (fb + bf)).reshape(ext.shape)
    return y[..., pad:pad + n]


def preprocess_filter(fs: float, notch_hz: float | None = 50.0, notch_q: float = 30.0,
                      band: tuple[float, float] = (1.0, 17.0), order: int = 6) -> BiquadCascade:
    """Notch followed by the band-pass, as one cascade."""
    bp = design_butterworth_bandpass(order, band[0], band[1], fs)
    if notch_hz is None:
        return bp
    return design_notch(notch_hz, notch_q, fs).then(bp)
