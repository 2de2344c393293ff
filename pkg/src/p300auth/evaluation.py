"""Experiment runner, metrics and report emission (JSON, CSV, SVG)."""
from __future__ import annotations

import json
import logging
import time
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from html import escape
from importlib import resources
from pathlib import Path

import numpy as np

from .datasets import EPOCHS, Dataset, to_statistics, train_test_split
from .features import WINDOWS
from .ml.pipeline import get_config, load_registry, pipeline_fit, statistics_configs

logger = logging.getLogger(__name__)

EXPERIMENTS = ("binary", "multiclass")
CONFIGURATIONS = ("base", "ica", "stats")
REPORT_FORMAT = 1


class EvaluationError(RuntimeError):
    pass


def compute_metrics(y_true, y_pred, positive: int | None = 1, labels=None) -> dict:
    """Accuracy, precision, recall, f1 and the confusion matrix (rows = true labels).

    With ``positive`` set, precision/recall/f1 refer to that class; with
    ``positive=None`` they are macro averages over ``labels``.  A class whose
    precision + recall is 0 gets f1 = 0.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"y_true has {y_true.shape} entries, y_pred {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("cannot score an empty prediction")
    labels = np.unique(np.concatenate([y_true, y_pred])) if labels is None else np.asarray(labels)
    index = {int(v): i for i, v in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(cm, ([index[int(v)] for v in y_true], [index[int(v)] for v in y_pred]), 1)

    tp = np.diag(cm).astype(float)
    pred_tot = cm.sum(axis=0)
    true_tot = cm.sum(axis=1)
    prec = np.divide(tp, pred_tot, out=np.zeros_like(tp), where=pred_tot > 0)
    rec = np.divide(tp, true_tot, out=np.zeros_like(tp), where=true_tot > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros_like(tp), where=denom > 0)

    if positive is not None:
        if int(positive) not in index:
            raise ValueError(f"positive label {positive} absent from labels {labels.tolist()}")
        k = index[int(positive)]
        p, r, f = prec[k], rec[k], f1[k]
    else:
        p, r, f = prec.mean(), rec.mean(), f1.mean()
    return {
        "accuracy": float(np.trace(cm) / cm.sum()),
        "precision": float(p),
        "recall": float(r),
        "f1": float(f),
        "labels": [int(v) for v in labels],
        "confusion": cm.tolist(),
    }


@dataclass
class RunResult:
    dataset: str
    classifier: str
    window: int | None
    metrics: dict
    train_n: int
    test_n: int
    fit_seconds: float
    predict_seconds: float

    def as_dict(self) -> dict:
        return {"dataset": self.dataset, "classifier": self.classifier, "window": self.window,
                "train_n": self.train_n, "test_n": self.test_n, **self.metrics}


@dataclass
class EvaluationReport:
    experiment: str
    configuration: str
    seed: int
    classifiers: list[str]
    windows: list[int | None]
    datasets: list[str]
    stride: int | None = None
    runs: list[RunResult] = field(default_factory=list)

    def select(self, classifier: str | None = None, window=...) -> list[RunResult]:
        return [r for r in self.runs
                if (classifier is None or r.classifier == classifier)
                and (window is ... or r.window == window)]

    def mean(self, classifier: str, metric: str = "f1", window=...) -> float:
        """Equal-weight mean over datasets (no pooling of predictions)."""
        if window is ...:
            window = self.windows[-1]
        vals = [r.metrics[metric] for r in self.select(classifier, window)]
        if not vals:
            raise KeyError(f"no runs for {classifier} at window {window}")
        return float(np.mean(vals))

    def overall_mean(self, metric: str = "f1", window=...) -> float:
        return float(np.mean([self.mean(c, metric, window) for c in self.classifiers]))

    def summary(self) -> list[dict]:
        out = []
        for w in self.windows:
            for cid in self.classifiers:
                runs = self.select(cid, w)
                if not runs:
                    continue
                entry = {"classifier": cid, "window": w, "n_datasets": len(runs)}
                for key in ("accuracy", "precision", "recall", "f1"):
                    entry[key] = float(np.mean([r.metrics[key] for r in runs]))
                entry["train_n"] = float(np.mean([r.train_n for r in runs]))
                entry["test_n"] = float(np.mean([r.test_n for r in runs]))
                labels, cm = pooled_confusion(runs)
                entry["labels"], entry["confusion"] = labels, cm.tolist()
                out.append(entry)
        return out

    def to_json(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "experiment": self.experiment,
            "configuration": self.configuration,
            "seed": self.seed,
            "stride": self.stride,
            "classifiers": list(self.classifiers),
            "windows": list(self.windows),
            "datasets": list(self.datasets),
            "summary": self.summary(),
            "runs": [r.as_dict() for r in self.runs],
        }

    def timings(self) -> list[dict]:
        return [{"dataset": r.dataset, "classifier": r.classifier, "window": r.window,
                 "fit_seconds": r.fit_seconds, "predict_seconds": r.predict_seconds}
                for r in self.runs]


def pooled_confusion(runs: list[RunResult]) -> tuple[list[int], np.ndarray]:
    labels = sorted({lab for r in runs for lab in r.metrics["labels"]})
    pos = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for r in runs:
        idx = [pos[lab] for lab in r.metrics["labels"]]
        cm[np.ix_(idx, idx)] += np.asarray(r.metrics["confusion"], dtype=np.int64)
    return labels, cm


def dataset_name(ds: Dataset) -> str:
    m = ds.manifest
    return f"{m.get('scope', 'dataset')}/r{m.get('replicate', 0)}"


def split_seed(seed: int, ds: Dataset) -> int:
    """Same dataset, same split, whatever the configuration or window."""
    key = [seed, int(ds.manifest.get("seed", 0)) % 2**63]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _run_one(task) -> RunResult:
    name, cid, window, train, test, positive = task
    t0 = time.perf_counter()
    try:
        fp = pipeline_fit(cid, train.X, train.y)
        t1 = time.perf_counter()
        pred = fp.predict(test.X)
    except Exception as exc:
        raise EvaluationError(f"dataset {name}, classifier {cid}"
                              + (f", window {window}" if window else "") + f": {exc}") from exc
    t2 = time.perf_counter()
    labels = np.unique(np.concatenate([train.y, test.y]))
    metrics = compute_metrics(test.y, pred, positive, labels)
    return RunResult(name, cid, window, metrics, train.n, test.n, t1 - t0, t2 - t1)


def _check_experiment(experiment: str, ds: Dataset) -> None:
    labels = sorted(ds.counts())
    if experiment == "binary" and labels != [0, 1]:
        raise EvaluationError(f"{dataset_name(ds)}: binary experiments need labels 0/1, "
                              f"got {labels}")
    if experiment == "multiclass" and len(labels) < 2:
        raise EvaluationError(f"{dataset_name(ds)}: needs at least two classes")


def run_experiment(experiment: str, configuration: str, datasets: Iterable[Dataset],
                   config_ids=None, seed: int = 0, windows=None, stride: int = 1,
                   jobs: int = 1) -> EvaluationReport:
    """Split 80/20, fit, predict and score every (dataset, window, classifier).

    Parameters
    ----------
    experiment : {"binary", "multiclass"}
    configuration : {"base", "ica", "stats"}
        ``base`` and ``ica`` expect epoch datasets.  ``stats`` accepts
        statistics datasets as is, or epoch datasets which are converted for
        every window in ``windows`` with the given ``stride``.
    datasets : iterable of Dataset
        Consumed once, one dataset at a time, so a generator keeps only
        the current dataset in memory.
    config_ids : list, optional
        Defaults to all 21 configs for epochs and the six vector-compatible
        ones for statistics.
    seed : int
        Drives the train/test split of each dataset.
    jobs : int
        Worker processes; results are assembled in task order either way.
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"experiment must be one of {EXPERIMENTS}")
    if configuration not in CONFIGURATIONS:
        raise ValueError(f"configuration must be one of {CONFIGURATIONS}")
    stats = configuration == "stats"
    if config_ids is None:
        config_ids = statistics_configs() if stats else list(load_registry())
    config_ids = [get_config(c).id for c in config_ids]
    positive = 1 if experiment == "binary" else None

    names, used_windows, used_stride, runs = [], [], None, []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        # one dataset at a time keeps memory bounded when ``datasets`` is a generator
        for ds in datasets:
            _check_experiment(experiment, ds)
            name = dataset_name(ds)
            names.append(name)
            if stats and ds.mode == EPOCHS:
                variants = [(w, to_statistics(ds, w, stride)) for w in (windows or WINDOWS)]
                used_stride = stride
            elif stats:
                variants = [(ds.manifest.get("window"), ds)]
                used_stride = ds.manifest.get("stride")
            elif ds.mode != EPOCHS:
                raise EvaluationError(f"{name}: configuration {configuration!r} needs epoch "
                                      f"datasets, got {ds.mode}")
            else:
                variants = [(None, ds)]
            sseed = split_seed(seed, ds)
            del ds
            tasks = []
            for w, variant in variants:
                if w not in used_windows:
                    used_windows.append(w)
                train, test = train_test_split(variant, seed=sseed)
                tasks.extend((name, cid, w, train, test, positive) for cid in config_ids)
            del variants
            done = list(pool.map(_run_one, tasks)) if pool and len(tasks) > 1 \
                else [_run_one(t) for t in tasks]
            for r in done:
                logger.info("%s %s w=%s f1=%.4f (%.1fs)", r.dataset, r.classifier, r.window,
                            r.metrics["f1"], r.fit_seconds)
            runs.extend(done)
    finally:
        if pool:
            pool.shutdown()
    if not names:
        raise EvaluationError("no datasets to evaluate")
    windows_sorted = sorted(used_windows, key=lambda w: -1 if w is None else w)
    return EvaluationReport(experiment, configuration, seed, config_ids, windows_sorted,
                            names, used_stride if stats else None, runs)


# ---------------------------------------------------------------- emission

def report_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report.schema.json").read_text())


def report_json(report: EvaluationReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"


def write_confusion_csv(report: EvaluationReport, classifier: str, path) -> None:
    """Pooled confusion counts per window; rows are true labels."""
    lines = []
    for w in report.windows:
        runs = report.select(classifier, w)
        if not runs:
            continue
        labels, cm = pooled_confusion(runs)
        if not lines:
            lines.append(",".join(["window", "true"] + [f"pred_{lab}" for lab in labels]))
        wtxt = "" if w is None else str(w)
        for lab, row in zip(labels, cm):
            lines.append(",".join([wtxt, str(lab)] + [str(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


_PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948")


def bar_chart_svg(groups: list[str], series: list[str], values: dict, title: str,
                  plot_height: float = 200.0) -> str:
    """Grouped bars; ``values[(group, series)]`` is an f1 in [0, 1] or missing.

    Each bar is a ``rect`` whose height is ``f1 * plot_height`` and which
    carries ``data-f1``, ``data-group`` and ``data-series`` attributes.
    """
    bar_w, gap, left, top = 12.0, 10.0, 40.0, 30.0
    group_w = bar_w * len(series) + gap
    width = left + group_w * len(groups) + 20
    height = top + plot_height + 60
    base = top + plot_height
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
           f'viewBox="0 0 {width:.0f} {height:.0f}" data-plot-height="{plot_height:g}">',
           f'<text x="{left}" y="18" font-size="13" font-family="sans-serif">{escape(title)}</text>',
           f'<line x1="{left}" y1="{base}" x2="{width - 10:.1f}" y2="{base}" stroke="#333"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="#333"/>']
    for tick in (0.0, 0.5, 1.0):
        y = base - tick * plot_height
        out.append(f'<text x="{left - 4}" y="{y + 4:.1f}" font-size="9" text-anchor="end" '
                   f'font-family="sans-serif">{tick:.1f}</text>')
    for gi, g in enumerate(groups):
        x0 = left + gap / 2 + gi * group_w
        for si, s in enumerate(series):
            v = values.get((g, s))
            if v is None:
                continue
            h = float(v) * plot_height
            out.append(f'<rect x="{x0 + si * bar_w:.2f}" y="{base - h:.4f}" width="{bar_w - 1:.1f}" '
                       f'height="{h:.4f}" fill="{_PALETTE[si % len(_PALETTE)]}" '
                       f'data-group="{escape(g)}" data-series="{escape(s)}" data-f1="{v:.6f}"/>')
        out.append(f'<text x="{x0 + bar_w * len(series) / 2:.1f}" y="{base + 14}" font-size="9" '
                   f'text-anchor="middle" font-family="sans-serif">{escape(g)}</text>')
    for si, s in enumerate(series):
        y = base + 32 + 12 * (si // 4)
        x = left + 90 * (si % 4)
        out.append(f'<rect x="{x}" y="{y - 8}" width="8" height="8" '
                   f'fill="{_PALETTE[si % len(_PALETTE)]}"/>')
        out.append(f'<text x="{x + 11}" y="{y}" font-size="9" font-family="sans-serif">'
                   f'{escape(s)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _window_label(w) -> str:
    return "epochs" if w is None else f"W={w}"


def emit_report(report: EvaluationReport, out_dir) -> list[Path]:
    """Write ``report.json``, ``timings.json``, ``confusion_<id>.csv`` and two SVG charts.

    ``report.json`` holds only deterministic content; wall-clock timings go
    to ``timings.json``.
    """
    if not report.runs:
        raise EvaluationError("refusing to emit an empty report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []

        def put(name: str, text: str):
            path = out / name
            path.write_text(text)
            written.append(path)

        put("report.json", report_json(report))
        put("timings.json", json.dumps(report.timings(), indent=2) + "\n")
        for cid in report.classifiers:
            path = out / f"confusion_{cid}.csv"
            write_confusion_csv(report, cid, path)
            written.append(path)

        top = report.windows[-1]
        label = f"{report.experiment} / {report.configuration}"
        put("f1_by_classifier.svg", bar_chart_svg(
            report.classifiers, [label],
            {(c, label): report.mean(c, "f1", top) for c in report.classifiers},
            f"mean f1 by classifier ({label}, {_window_label(top)})"))
        series = [_window_label(w) for w in report.windows]
        put("f1_by_window.svg", bar_chart_svg(
            report.classifiers, series,
            {(c, _window_label(w)): report.mean(c, "f1", w)
             for c in report.classifiers for w in report.windows if report.select(c, w)},
            f"mean f1 by window size ({label})"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {out}: {exc.strerror}",
                      str(exc.filename or out)) from exc
    return written


def configuration_chart(reports: list[EvaluationReport], path) -> Path:
    """Grouped bars: classifiers on the x axis, one series per configuration."""
    classifiers = list(dict.fromkeys(c for r in reports for c in r.classifiers))
    values = {(c, r.configuration): r.mean(c) for r in reports for c in r.classifiers}
    svg = bar_chart_svg(classifiers, [r.configuration for r in reports], values,
                        f"mean f1 by configuration ({reports[0].experiment})")
    Path(path).write_text(svg)
    return Path(path)
