import numpy as np
import pytest

from p300auth.ml.estimators import FitError
from p300auth.ml.pipeline import (MAGIC, OneVsRest, PipelineConfig, dumps, get_config, load,
                                  load_registry, loads, needs_one_vs_rest, normalize_id,
                                  pipeline_fit, pipeline_predict, read_header, save,
                                  statistics_configs)
from p300auth.ml.transforms import ModeError
from reference_tables import published_matrix, registry_matrix


def epochs(n_classes=2, per=30, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(n_classes), per)
    X = rng.normal(size=(len(y), 8, 232))
    t = np.arange(232)
    for c in range(n_classes):
        X[y == c, c % 8] += 3 * np.exp(-0.5 * ((t - 80 - 10 * c) / 15.0) ** 2)
    return X, y


def test_registry_matches_published_table():
    reg = load_registry()
    assert list(reg) == [f"Cl{i}" for i in range(1, 22)]
    np.testing.assert_array_equal(registry_matrix(reg), published_matrix())


def test_statistics_mode_configs():
    assert statistics_configs() == ["Cl1", "Cl2", "Cl6", "Cl7", "Cl8", "Cl9"]


def test_hyperparameters():
    assert get_config(19).params["KNN"] == {"n_neighbors": 50}
    assert get_config(6).params["RF"]["random_state"] == 42
    assert get_config(3).params["XDawn"] == {"nfilter": 2, "target": 1}
    assert get_config(4).params["ERPC"]["estimator"] == "oas"
    assert get_config(8).params["SVM"]["gamma"] == "scale"


@pytest.mark.parametrize("key", [6, "6", "Cl6", "cl 6", " Cl 6 "])
def test_normalize_id(key):
    assert normalize_id(key) == "Cl6"


def test_unknown_ids():
    with pytest.raises(KeyError):
        normalize_id("RF")
    with pytest.raises(KeyError, match="Cl22"):
        get_config(22)


def test_invalid_config():
    with pytest.raises(ValueError):
        PipelineConfig("Cl99", ("Vect", "Magic"), "LR")
    with pytest.raises(ValueError, match="MDM"):
        PipelineConfig("Cl99", ("Vect",), "MDM")


@pytest.mark.parametrize("cid", ["Cl3", "Cl4", "Cl5", "Cl12"])
def test_epoch_only_configs_reject_flat_vectors(cid):
    X = np.zeros((20, 48))
    with pytest.raises(ModeError, match=cid):
        pipeline_fit(cid, X, np.arange(20) % 2)


@pytest.mark.parametrize("cid", [f"Cl{i}" for i in range(1, 22)])
def test_every_config_fits_epochs(cid):
    X, y = epochs(per=80)
    fp = pipeline_fit(cid, X, y)
    assert fp.mode == "epochs" and fp.classes == (0, 1)
    assert not fp.one_vs_rest
    pred = pipeline_predict(fp, X)
    assert set(pred) <= {0, 1}
    assert np.mean(pred == y) >= 0.6


def test_one_vs_rest_policy():
    reg = load_registry()
    assert not any(needs_one_vs_rest(c, 2) for c in reg.values())
    wrapped = sorted(c.number for c in reg.values() if needs_one_vs_rest(c, 10))
    expected = {1, 8} | {c.number for c in reg.values() if c.epoch_only}
    assert wrapped == sorted(expected)


def test_one_vs_rest_on_ten_classes():
    rng = np.random.default_rng(1)
    centers = rng.normal(size=(10, 6)) * 4
    y = np.repeat(np.arange(10), 20)
    X = centers[y] + rng.normal(size=(200, 6))
    fp = pipeline_fit("Cl1", X, y)
    assert fp.one_vs_rest and len(fp.model.models_) == 10
    assert fp.classes == tuple(range(10))
    assert np.mean(pipeline_predict(fp, X) == y) >= 0.9


def test_one_vs_rest_epoch_pipeline_multiclass():
    X, y = epochs(n_classes=3, per=20, seed=2)
    fp = pipeline_fit("Cl5", X, y)
    assert fp.one_vs_rest and len(fp.model.models_) == 3
    assert fp.model.scores(X).shape == (60, 3)


def test_one_vs_rest_degenerate():
    with pytest.raises(FitError):
        OneVsRest(lambda: None).fit(np.zeros((4, 2)), np.zeros(4))


def test_container_round_trip(tmp_path):
    X, y = epochs(per=20, seed=3)
    fp = pipeline_fit("Cl11", X, y)
    data = dumps(fp)
    assert data.startswith(MAGIC)
    header, _ = read_header(data)
    assert header["config"] == "Cl11" and header["mode"] == "epochs"
    assert header["input_shape"] == [8, 232] and header["seeds"] == {"RF": 42}
    np.testing.assert_array_equal(pipeline_predict(loads(data), X), pipeline_predict(fp, X))
    save(fp, tmp_path / "m.bin")
    np.testing.assert_array_equal(load(tmp_path / "m.bin").scores(X), fp.scores(X))


def test_container_rejects_garbage_and_wrong_shape():
    with pytest.raises(ValueError, match="container"):
        loads(b"not a model")
    X, y = epochs(per=10)
    fp = pipeline_fit("Cl2", X, y)
    with pytest.raises(ValueError, match="Cl2"):
        fp.predict(X[:, :, :100])
