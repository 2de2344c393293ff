"""Registry of the 21 pipeline configurations, fitting, One-vs-Rest and persistence."""
from __future__ import annotations

import io
import json
import pickle
import re
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .estimators import KNN, LDA, MDM, QDA, FitError, LogisticRegression
from .forest import RandomForest
from .svm import SVM
from .transforms import ERPCovariance, ModeError, StandardScaler, TangentSpace, Vectorizer, Xdawn

TRANSFORMS = {"Vect": Vectorizer, "SS": StandardScaler, "XDawn": Xdawn, "ERPC": ERPCovariance,
              "TS": TangentSpace}
ESTIMATORS = {"LR": LogisticRegression, "LDA": LDA, "MDM": MDM, "RF": RandomForest, "QDA": QDA,
              "SVM": SVM, "KNN": KNN}
# transforms whose fit needs an epoch tensor and a target class
EPOCH_ONLY = frozenset({"XDawn", "ERPC"})
BINARY_ESTIMATORS = frozenset({"LR", "SVM"})

MAGIC = b"P3APIPE\x00"
CONTAINER_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    id: str
    transforms: tuple[str, ...]
    estimator: str
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        unknown = [t for t in self.transforms if t not in TRANSFORMS]
        if unknown:
            raise ValueError(f"{self.id}: unknown transforms {unknown}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"{self.id}: unknown estimator {self.estimator!r}")
        if self.estimator == "MDM" and "ERPC" not in self.transforms:
            raise ValueError(f"{self.id}: MDM needs SPD input from ERPC")

    @property
    def number(self) -> int:
        return int(self.id[2:])

    @property
    def epoch_only(self) -> bool:
        return bool(EPOCH_ONLY.intersection(self.transforms))

    @property
    def label(self) -> str:
        return "+".join(self.transforms + (self.estimator,))

    def make_steps(self) -> list:
        return [TRANSFORMS[t](**self.params.get(t, {})) for t in self.transforms]

    def make_estimator(self):
        return ESTIMATORS[self.estimator](**self.params.get(self.estimator, {}))


def normalize_id(key) -> str:
    """Accept ``6``, ``"6"``, ``"Cl6"`` or ``"Cl 6"``."""
    m = re.fullmatch(r"(?:cl\s*)?(\d+)", str(key).strip(), flags=re.IGNORECASE)
    if not m:
        raise KeyError(f"not a classifier id: {key!r}")
    return f"Cl{int(m.group(1))}"


@lru_cache(maxsize=1)
def _registry_doc() -> dict:
    return json.loads(resources.files(__package__).joinpath("classifiers.json").read_text())


def load_registry(path=None) -> dict[str, PipelineConfig]:
    """Configs in execution order, keyed by id (``"Cl1"`` ... ``"Cl21"``)."""
    doc = json.loads(Path(path).read_text()) if path else _registry_doc()
    hp = doc.get("hyperparameters", {})
    out = {}
    for row in doc["classifiers"]:
        steps = tuple(row["transforms"])
        params = {k: dict(hp.get(k, {})) for k in steps + (row["estimator"],)}
        out[row["id"]] = PipelineConfig(row["id"], steps, row["estimator"], params)
    return out


def get_config(key) -> PipelineConfig:
    reg = load_registry()
    cid = normalize_id(key)
    if cid not in reg:
        raise KeyError(f"unknown classifier {cid}; known: Cl1..Cl{len(reg)}")
    return reg[cid]


def statistics_configs() -> list[str]:
    return [cid for cid, c in load_registry().items() if not c.epoch_only]


def needs_one_vs_rest(config: PipelineConfig, n_classes: int) -> bool:
    """Binary-only estimators and target-class transforms are reduced per class."""
    return n_classes > 2 and (config.estimator in BINARY_ESTIMATORS or config.epoch_only)


class Pipeline:
    """Transforms fitted in declared order on the training data, estimator last."""

    def __init__(self, config: PipelineConfig):
        self.config = config

    def fit(self, X, y):
        steps = self.config.make_steps()
        for step in steps:
            X = step.fit(X, y).transform(X)
        self.steps_ = steps
        self.estimator_ = self.config.make_estimator().fit(X, y)
        self.classes_ = self.estimator_.classes_
        return self

    def _transform(self, X):
        for step in self.steps_:
            X = step.transform(X)
        return X

    def scores(self, X):
        return self.estimator_.scores(self._transform(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.scores(X), axis=1)]


class OneVsRest:
    """One binary model per class (class = 1, rest = 0); predict by the highest score.

    Each model's score is its positive-class column: a probability, posterior,
    vote fraction, margin or negative distance depending on the estimator.
    With two classes a single model is fitted.
    """

    def __init__(self, factory):
        self.factory = factory

    def fit(self, X, y):
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise FitError(f"OneVsRest needs at least two classes, got {self.classes_.tolist()}")
        if len(self.classes_) == 2:
            self.models_ = [self.factory().fit(X, y)]
            return self
        self.models_ = []
        for c in self.classes_:
            target = (y == c).astype(int)
            try:
                self.models_.append(self.factory().fit(X, target))
            except (FitError, ValueError) as exc:
                raise FitError(f"one-vs-rest model for class {c} failed: {exc}") from exc
        return self

    def scores(self, X):
        if len(self.models_) == 1:
            return self.models_[0].scores(X)
        return np.column_stack([m.scores(X)[:, 1] for m in self.models_])

    def predict(self, X):
        return self.classes_[np.argmax(self.scores(X), axis=1)]


def build_model(config: PipelineConfig, n_classes: int):
    if needs_one_vs_rest(config, n_classes):
        return OneVsRest(lambda: Pipeline(config))
    return Pipeline(config)


@dataclass(frozen=True)
class FittedPipeline:
    config: PipelineConfig
    model: object
    mode: str
    input_shape: tuple[int, ...]
    classes: tuple[int, ...]

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1:] != self.input_shape:
            raise ValueError(f"{self.config.id} was fitted on samples of shape "
                             f"{self.input_shape}, got {X.shape[1:]}")
        return X

    def predict(self, X) -> np.ndarray:
        return self.model.predict(self._check(X))

    def scores(self, X) -> np.ndarray:
        return self.model.scores(self._check(X))

    @property
    def one_vs_rest(self) -> bool:
        return isinstance(self.model, OneVsRest)


def input_mode(X) -> str:
    ndim = np.ndim(X)
    if ndim == 3:
        return "epochs"
    if ndim == 2:
        return "statistics"
    raise ValueError(f"expected 2-D feature vectors or 3-D epochs, got {ndim}-D input")


def pipeline_fit(config: PipelineConfig | str | int, X, y) -> FittedPipeline:
    if not isinstance(config, PipelineConfig):
        config = get_config(config)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    mode = input_mode(X)
    if mode == "statistics" and config.epoch_only:
        bad = sorted(EPOCH_ONLY.intersection(config.transforms))
        raise ModeError(f"{config.id} ({config.label}) uses {', '.join(bad)}, whose fit needs "
                        f"3-D epochs; statistics vectors are 2-D")
    model = build_model(config, len(np.unique(y))).fit(X, y)
    return FittedPipeline(config, model, mode, X.shape[1:], tuple(int(c) for c in model.classes_))


def pipeline_predict(fp: FittedPipeline, X) -> np.ndarray:
    return fp.predict(X)


def _seeds(config: PipelineConfig) -> dict:
    return {k: v["random_state"] for k, v in config.params.items() if "random_state" in v}


def dumps(fp: FittedPipeline) -> bytes:
    """Serialize as ``MAGIC | version | header length | JSON header | pickle``."""
    header = json.dumps({
        "config": fp.config.id, "label": fp.config.label, "mode": fp.mode,
        "input_shape": list(fp.input_shape), "classes": list(fp.classes),
        "seeds": _seeds(fp.config), "one_vs_rest": fp.one_vs_rest,
    }, sort_keys=True).encode()
    payload = pickle.dumps(fp, protocol=pickle.HIGHEST_PROTOCOL)
    return MAGIC + struct.pack("<HI", CONTAINER_VERSION, len(header)) + header + payload


def read_header(data: bytes) -> tuple[dict, int]:
    if data[:len(MAGIC)] != MAGIC:
        raise ValueError("not a fitted-pipeline container")
    version, hlen = struct.unpack_from("<HI", data, len(MAGIC))
    if version != CONTAINER_VERSION:
        raise ValueError(f"unsupported container version {version}")
    start = len(MAGIC) + struct.calcsize("<HI")
    return json.loads(data[start:start + hlen]), start + hlen


def loads(data: bytes) -> FittedPipeline:
    header, offset = read_header(data)
    fp = pickle.load(io.BytesIO(data[offset:]))
    if fp.config.id != header["config"]:
        raise ValueError("container header and payload disagree")
    return fp


def save(fp: FittedPipeline, path) -> None:
    Path(path).write_bytes(dumps(fp))


def load(path) -> FittedPipeline:
    return loads(Path(path).read_bytes())
