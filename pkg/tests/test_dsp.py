import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import signal

from p300auth.dsp import (BiquadCascade, FilterDesignError, apply_zero_phase,
                          design_butterworth_bandpass, design_notch, frequency_response, padlen,
                          preprocess_filter)

FS = 256


def db(h):
    return 20 * np.log10(np.abs(h))


@pytest.fixture(scope="module")
def bandpass():
    return design_butterworth_bandpass(6, 1, 17, FS)


@pytest.fixture(scope="module")
def notch():
    return design_notch(50, 30, FS)


def test_bandpass_structure(bandpass):
    assert bandpass.n_sections == 6
    assert bandpass.is_stable()
    assert len(bandpass.poles()) == 12


def test_bandpass_matches_scipy_design(bandpass):
    ref = signal.butter(6, [1, 17], btype="bandpass", fs=FS, output="sos")
    f = np.linspace(0.1, 127.9, 500)
    _, h_ref = signal.sosfreqz(ref, worN=f, fs=FS)
    np.testing.assert_allclose(np.abs(frequency_response(bandpass, f)), np.abs(h_ref),
                               atol=1e-9)


def test_bandpass_reference_points(bandpass):
    h = db(frequency_response(bandpass, [1.0, 17.0, np.sqrt(17), 50.0]))
    assert abs(h[0] + 3.0103) < 0.5 and abs(h[1] + 3.0103) < 0.5
    assert h[2] >= -1.0
    assert h[3] <= -60.0


def test_frequency_response_agrees_with_sosfreqz(bandpass, notch):
    f = np.linspace(0, 128, 257)
    for filt in (bandpass, notch, notch.then(bandpass)):
        _, h = signal.sosfreqz(filt.sos, worN=f, fs=FS)
        np.testing.assert_allclose(frequency_response(filt, f), h, atol=1e-12)


def test_notch_matches_scipy(notch):
    b, a = signal.iirnotch(50, 30, FS)
    np.testing.assert_allclose(notch.sections[0], np.r_[b, a[1:]], atol=1e-12)
    h = frequency_response(notch, [0.0, 10.0, 50.0, 128.0])
    assert abs(abs(h[0]) - 1) < 1e-9 and abs(abs(h[3]) - 1) < 1e-9
    assert db(h[1]) >= -0.5
    assert db(h[2]) <= -40


def test_notch_kills_steady_sine(notch):
    t = np.arange(20 * FS) / FS
    x = np.sin(2 * np.pi * 50 * t)
    y = signal.sosfilt(notch.sos, x)[10 * FS:]
    assert np.sqrt(np.mean(y**2)) <= 0.01 * np.sqrt(np.mean(x[10 * FS:] ** 2))


def test_identity_section():
    ident = BiquadCascade(np.array([[1.0, 0, 0, 0, 0]]), FS)
    np.testing.assert_allclose(frequency_response(ident, np.linspace(0, 128, 9)), 1.0)


@pytest.mark.parametrize("args", [(6, 0, 17, FS), (6, 17, 1, FS), (6, 1, 128, FS), (0, 1, 17, FS)])
def test_bad_bandpass(args):
    with pytest.raises(FilterDesignError):
        design_butterworth_bandpass(*args)


@pytest.mark.parametrize("f0, q", [(0, 30), (128, 30), (50, 0)])
def test_bad_notch(f0, q):
    with pytest.raises(FilterDesignError):
        design_notch(f0, q, FS)


@given(st.integers(1, 8), st.floats(0.5, 20), st.floats(1.2, 4.0))
def test_designs_are_stable(order, low, ratio):
    high = min(low * ratio, 120)
    assert design_butterworth_bandpass(order, low, high, FS).is_stable()


def test_zero_phase_matches_sosfiltfilt(bandpass, notch, rng):
    # mean of scipy's forward-backward pass and its mirror image
    filt = notch.then(bandpass)
    x = rng.normal(size=(3, 4000))
    n = padlen(filt)
    ref = 0.5 * (signal.sosfiltfilt(filt.sos, x, axis=-1, padlen=n)
                 + signal.sosfiltfilt(filt.sos, x[:, ::-1], axis=-1, padlen=n)[:, ::-1])
    np.testing.assert_allclose(apply_zero_phase(filt, x), ref, atol=1e-10)


def test_zero_phase_has_no_lag(bandpass):
    t = np.arange(10 * FS) / FS
    x = np.sin(2 * np.pi * 10 * t)
    y = apply_zero_phase(bandpass, x)
    mid = slice(2 * FS, 8 * FS)
    lags = np.arange(-20, 21)
    xc = [np.dot(x[mid], np.roll(y, -k)[mid]) for k in lags]
    assert lags[int(np.argmax(xc))] == 0


def test_symmetric_pulse_stays_symmetric(bandpass):
    x = np.zeros(2001)
    x[1000 - 30:1000 + 31] = np.hanning(61)
    y = apply_zero_phase(bandpass, x)
    np.testing.assert_allclose(y, y[::-1], atol=1e-10)


def test_zero_in_zero_out(bandpass):
    assert not np.any(apply_zero_phase(bandpass, np.zeros((8, 500))))


def test_short_signal_rejected(bandpass):
    with pytest.raises(ValueError, match="too short"):
        apply_zero_phase(bandpass, np.zeros(18))


signals = hnp.arrays(np.float64, 300, elements=st.floats(-100, 100, allow_nan=False))


@given(signals, signals, st.floats(-5, 5), st.floats(-5, 5))
def test_linearity(x, y, a, b):
    filt = preprocess_filter(FS)
    lhs = apply_zero_phase(filt, a * x + b * y)
    rhs = a * apply_zero_phase(filt, x) + b * apply_zero_phase(filt, y)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1.0)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * scale)


@given(signals)
def test_time_reversal_symmetry(x):
    filt = preprocess_filter(FS)
    np.testing.assert_array_equal(apply_zero_phase(filt, x[::-1]), apply_zero_phase(filt, x)[::-1])


def test_preprocess_filter_order():
    filt = preprocess_filter(FS)
    assert filt.n_sections == 7
    np.testing.assert_allclose(filt.sections[0], design_notch(50, 30, FS).sections[0])
    assert preprocess_filter(FS, notch_hz=None).n_sections == 6
