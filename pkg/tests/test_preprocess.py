import numpy as np

from p300auth.dsp import apply_zero_phase, preprocess_filter
from p300auth.preprocess import (PreprocessConfig, corpus_epochs, ica_seed, preprocess_session,
                                 session_epochs)


def test_filter_only(session):
    out = preprocess_session(session)
    np.testing.assert_array_equal(out.samples, apply_zero_phase(preprocess_filter(256),
                                                                session.samples))
    assert out.markers == session.markers
    assert out.manifest["preprocess"]["band"] == [1.0, 17.0]
    assert "ica_removed" not in out.manifest
    assert session.manifest.get("preprocess") is None


def test_ica_records_flagged_components(session):
    out = preprocess_session(session, PreprocessConfig(ica=True))
    assert out.manifest["ica_removed"]
    assert isinstance(out.manifest["ica_converged"], bool)
    again = preprocess_session(session, PreprocessConfig(ica=True))
    np.testing.assert_array_equal(out.samples, again.samples)


def test_ica_seed_depends_on_session(session):
    other = session.with_samples(session.samples)
    other.session_id = session.session_id + 1
    assert ica_seed(session) != ica_seed(other)


def test_epochs_and_corpus(session):
    eps = session_epochs(session)
    assert len(eps) == 200
    grouped = corpus_epochs([session, session])
    assert list(grouped) == [0] and len(grouped[0]) == 400
    raw = session_epochs(session, PreprocessConfig(baseline=False))
    assert not np.allclose(raw[0].data[:, :26].mean(axis=1), 0)


def test_corpus_targets_only(session):
    grouped = corpus_epochs(iter([session]), targets_only=True)
    assert len(grouped[0]) == 40 and all(e.label == "target" for e in grouped[0])
