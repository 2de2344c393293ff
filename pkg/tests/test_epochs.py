import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from p300auth.acquire import NON_TARGET, TARGET, SessionRecording, StimulusEvent, session_timestamps
from p300auth.epochs import (EPOCH_LEN, POST, PRE, Epoch, EpochError, baseline_correct,
                             extract_epochs, load_epochs_npz, read_epochs_csv, save_epochs_npz,
                             stack, write_epochs_csv)


def _ramp_recording(n=3000, markers=((1000, TARGET),)):
    samples = np.tile(np.arange(n, dtype=float), (8, 1)) + np.arange(8)[:, None] * 1e4
    return SessionRecording(0, 0, session_timestamps(n), samples,
                            [StimulusEvent(i, k) for i, k in markers])


def test_window_arithmetic():
    assert (PRE, POST, EPOCH_LEN) == (26, 205, 232)
    ep = extract_epochs(_ramp_recording(), baseline=False)[0]
    assert ep.data.shape == (8, 232)
    assert ep.data[0, 0] == 974 and ep.data[0, -1] == 1205
    assert ep.onset_sample == 1000


def test_synth_session_epochs(session):
    eps = extract_epochs(session)
    assert len(eps) == 200
    assert sum(e.label == TARGET for e in eps) == 40
    assert all(e.data.shape == (8, 232) for e in eps)


def test_edge_markers_dropped_with_warning(caplog):
    rec = _ramp_recording(markers=((10, TARGET), (500, NON_TARGET), (2900, TARGET)))
    with caplog.at_level(logging.WARNING):
        eps = extract_epochs(rec)
    assert [e.epoch_id for e in eps] == [1]
    assert sum("dropping marker" in r.message for r in caplog.records) == 2


@given(st.lists(st.integers(0, 1999), min_size=1, max_size=30, unique=True))
def test_epoch_count_bounded_by_markers(positions):
    rec = _ramp_recording(2000, [(p, TARGET) for p in sorted(positions)])
    eps = extract_epochs(rec)
    inside = [p for p in positions if PRE <= p <= 2000 - POST - 1]
    assert len(eps) == len(inside) <= len(positions)


def test_no_markers_is_an_error():
    with pytest.raises(EpochError):
        extract_epochs(_ramp_recording(markers=()))


def test_baseline_correction():
    const = Epoch(0, 0, 0, TARGET, np.full((8, 232), 7.5))
    assert not np.any(baseline_correct(const).data)
    rng = np.random.default_rng(2)
    ep = baseline_correct(Epoch(0, 0, 0, TARGET, rng.normal(size=(8, 232)) + 40))
    np.testing.assert_allclose(ep.data[:, :26].mean(axis=1), 0, atol=1e-9)


def test_baseline_keeps_p300_peak():
    t = np.arange(232)
    bump = 10 * np.exp(-0.5 * ((t - 110) / 15.0) ** 2)
    data = np.tile(bump + 3.0, (8, 1))
    ep = Epoch(0, 0, 0, TARGET, data)
    assert np.argmax(baseline_correct(ep).data[4, 26:]) == np.argmax(data[4, 26:])


def test_epoch_shape_invariant():
    with pytest.raises(EpochError):
        Epoch(0, 0, 0, TARGET, np.zeros((8, 231)))
    with pytest.raises(EpochError):
        Epoch(0, 0, 0, "maybe", np.zeros((8, 232)))


def test_csv_round_trip(session, tmp_path):
    eps = extract_epochs(session)
    path = tmp_path / "e.csv"
    write_epochs_csv(eps, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "subject_id,session_id,epoch_id,label,sample_idx,Fp1,Fp2,C3,C4,P7,P8,O1,O2"
    assert len(lines) - 1 == 200 * 232
    assert lines[1].split(",")[4] == "-26" and lines[232].split(",")[4] == "205"
    back = read_epochs_csv(path)
    assert [e.key for e in back] == [e.key for e in eps]
    assert [e.label for e in back] == [e.label for e in eps]
    np.testing.assert_allclose(stack(back)[0], stack(eps)[0], atol=5e-7)


def test_short_epoch_in_csv_rejected(session, tmp_path):
    path = tmp_path / "e.csv"
    write_epochs_csv(extract_epochs(session)[:2], path)
    lines = path.read_text().splitlines()
    del lines[100]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(EpochError, match="out of sequence|231 samples"):
        read_epochs_csv(path)


def test_truncated_final_epoch_names_line(session, tmp_path):
    path = tmp_path / "e.csv"
    write_epochs_csv(extract_epochs(session)[:2], path)
    lines = path.read_text().splitlines()[:-1]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(EpochError, match=r":234: epoch .* has 231 samples"):
        read_epochs_csv(path)


def test_malformed_epoch_row(session, tmp_path):
    path = tmp_path / "e.csv"
    write_epochs_csv(extract_epochs(session)[:1], path)
    lines = path.read_text().splitlines()
    lines[5] = lines[5] + ",1"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(EpochError, match=":6:"):
        read_epochs_csv(path)


def test_npz_round_trip_is_exact_and_stable(session, tmp_path):
    eps = extract_epochs(session)[:20]
    save_epochs_npz(eps, tmp_path / "a.npz")
    save_epochs_npz(eps, tmp_path / "b.npz")
    assert (tmp_path / "a.npz").read_bytes() == (tmp_path / "b.npz").read_bytes()
    back = load_epochs_npz(tmp_path / "a.npz")
    assert [(e.key, e.label, e.onset_sample) for e in back] == \
        [(e.key, e.label, e.onset_sample) for e in eps]
    np.testing.assert_array_equal(stack(back)[0], stack(eps)[0])


def test_stack_labels():
    eps = [Epoch(0, 0, i, k, np.zeros((8, 232))) for i, k in enumerate([TARGET, NON_TARGET])]
    X, y = stack(eps)
    assert X.shape == (2, 8, 232) and y.tolist() == [1, 0]
    assert stack([])[0].shape == (0, 8, 232)
