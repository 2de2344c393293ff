import numpy as np
import pytest

from p300auth.dsp import apply_zero_phase, preprocess_filter
from p300auth.ica import (RankDeficientError, clean_blinks, detect_artifact_components,
                          fastica_fit, remove_components, whiten)
from p300auth.synth import generate_session, make_schedule, without_blinks


@pytest.fixture(scope="module")
def filtered(session):
    return apply_zero_phase(preprocess_filter(256), session.samples)


@pytest.fixture(scope="module")
def fitted(filtered):
    return fastica_fit(filtered, seed=3)


def _blink_mask(rec):
    return rec.manifest["blink_train"] > 0


def test_recovers_two_uniform_sources():
    rng = np.random.default_rng(5)
    s = rng.uniform(-1, 1, size=(2, 5000))
    a = rng.normal(size=(2, 2))
    model = fastica_fit(a @ s, seed=0)
    est = model.sources(a @ s)
    corr = np.abs(np.corrcoef(np.vstack([s, est]))[:2, 2:])
    # best matching up to permutation and sign
    assert max(corr[0, 0] + corr[1, 1], corr[0, 1] + corr[1, 0]) / 2 >= 0.99
    assert model.converged


def test_model_invariants(fitted, filtered):
    np.testing.assert_allclose(np.linalg.norm(fitted.rotation, axis=1), 1.0, atol=1e-10)
    np.testing.assert_allclose(fitted.unmixing @ fitted.mixing, np.eye(8), atol=1e-6)
    _, k, z = whiten(filtered, 8)
    np.testing.assert_allclose(z @ z.T / z.shape[1], np.eye(8), atol=1e-6)


def test_deterministic(filtered):
    a = fastica_fit(filtered[:, :20000], seed=9, max_iter=30)
    b = fastica_fit(filtered[:, :20000], seed=9, max_iter=30)
    np.testing.assert_array_equal(a.unmixing, b.unmixing)
    assert (a.converged, a.iterations) == (b.converged, b.iterations)


def test_gaussian_noise_does_not_crash():
    x = np.random.default_rng(0).normal(size=(8, 4000))
    model = fastica_fit(x, seed=0, max_iter=50)
    assert model.iterations <= 50
    assert isinstance(model.converged, bool)


def test_rank_deficient_input_suggests_channel_removal():
    x = np.random.default_rng(0).normal(size=(8, 2000))
    x[7] = x[6]
    with pytest.raises(RankDeficientError, match="remove"):
        fastica_fit(x)


def test_input_checks():
    with pytest.raises(ValueError):
        fastica_fit(np.zeros((8, 50)))
    with pytest.raises(ValueError):
        fastica_fit(np.random.default_rng(0).normal(size=(8, 500)), n_components=9)


def test_blink_component_flagged(fitted, filtered, session):
    flagged = detect_artifact_components(fitted, filtered)
    assert flagged
    blink = session.manifest["blink_train"]
    src = fitted.sources(filtered)[flagged[0]]
    filt_blink = apply_zero_phase(preprocess_filter(256), blink)
    assert abs(np.corrcoef(src, filt_blink)[0, 1]) >= 0.8


def test_detection_boundaries(fitted, filtered, profile):
    assert detect_artifact_components(fitted, filtered, threshold=1.0) == []
    clean = generate_session(without_blinks(profile), make_schedule(11), 0)
    x = apply_zero_phase(preprocess_filter(256), clean.samples)
    assert detect_artifact_components(fastica_fit(x, seed=1), x) == []


def test_flagged_order_is_by_correlation(fitted, filtered):
    flagged = detect_artifact_components(fitted, filtered, threshold=0.0)
    ref = filtered[:2].mean(axis=0)
    src = fitted.sources(filtered)
    corr = [abs(np.corrcoef(src[i], ref)[0, 1]) for i in flagged]
    assert corr == sorted(corr, reverse=True)
    assert sorted(flagged) == list(range(8))


def test_remove_nothing_is_identity(fitted, filtered):
    np.testing.assert_allclose(remove_components(fitted, filtered, []), filtered, atol=1e-6)


def test_remove_everything_leaves_means(fitted, filtered):
    out = remove_components(fitted, filtered, range(8))
    np.testing.assert_allclose(out, np.broadcast_to(fitted.component_means[:, None], out.shape),
                               atol=1e-9)


def test_remove_is_idempotent(fitted, filtered):
    once = remove_components(fitted, filtered, [0, 3])
    np.testing.assert_allclose(remove_components(fitted, once, [0, 3]), once, atol=1e-8)


def test_remove_rejects_bad_index(fitted, filtered):
    with pytest.raises(IndexError):
        remove_components(fitted, filtered, [8])


def test_blink_removal_reduces_frontal_rms_only(filtered, session):
    cleaned, _, flagged = clean_blinks(filtered, seed=3)
    assert flagged
    mask = _blink_mask(session)

    def rms(x, ch):
        return np.sqrt(np.mean(x[ch, mask] ** 2))

    assert rms(cleaned, 0) <= 0.5 * rms(filtered, 0)
    assert abs(rms(cleaned, 4) - rms(filtered, 4)) <= 0.1 * rms(filtered, 4)
