"""Command line entry point: ``p300auth <subcommand>``.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .acquire import read_session_csv, replay, stream_ingest, write_session_csv
from .datasets import (build_binary, build_multiclass, load_dataset, manifest_json, save_dataset,
                       to_statistics)
from .epochs import (LABELS, extract_epochs, load_epochs_npz, read_epochs_csv, save_epochs_npz,
                     write_epochs_csv)
from .evaluation import CONFIGURATIONS, EXPERIMENTS, bar_chart_svg, emit_report, run_experiment
from .features import WINDOWS, FeatureBlock, sliding_stats, write_features_csv
from .ml.pipeline import load_registry, statistics_configs
from .preprocess import PreprocessConfig, preprocess_session
from .synth import SynthConfig, make_schedule, make_subject_profile, generate_session, session_seed

logger = logging.getLogger("p300auth")

EXIT_OK, EXIT_STAGE, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"stage {stage} failed: {exc}")
        self.stage = stage


# ------------------------------------------------------------------ config

@dataclass
class RunConfig:
    """Flat, JSON-serialisable settings of a full run.

    Defaults follow the recording protocol: 10 subjects with 20 sessions
    each, 50 Hz notch (Q 30), 1-17 Hz order-6 band-pass, 5 replicates.
    ``stride`` is the step of the statistics sliding window.
    """

    master_seed: int = 0
    subjects: int = 10
    sessions_per_subject: int = 20
    notch_hz: float = 50.0
    notch_q: float = 30.0
    band_low_hz: float = 1.0
    band_high_hz: float = 17.0
    filter_order: int = 6
    ica: bool = True
    ica_threshold: float = 0.7
    stats_from_ica: bool = True
    windows: list = field(default_factory=lambda: list(WINDOWS))
    stride: int = 1
    replicates: int = 5
    experiments: list = field(default_factory=lambda: list(EXPERIMENTS))
    configurations: list = field(default_factory=lambda: list(CONFIGURATIONS))
    classifiers: list | None = None
    output_root: str = "runs/default"
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.subjects >= 2, "subjects must be at least 2")
        need(self.sessions_per_subject >= 1, "sessions_per_subject must be positive")
        need(0 < self.band_low_hz < self.band_high_hz < 128, "need 0 < band_low < band_high < 128")
        need(self.filter_order >= 1, "filter_order must be positive")
        need(0 < self.ica_threshold < 1, "ica_threshold must lie in (0, 1)")
        need(self.windows and all(isinstance(w, int) and 1 <= w for w in self.windows),
             "windows must be positive integers")
        need(isinstance(self.stride, int) and self.stride >= 1, "stride must be a positive integer")
        need(self.replicates >= 1, "replicates must be positive")
        need(self.jobs >= 1, "jobs must be positive")
        bad = [e for e in self.experiments if e not in EXPERIMENTS]
        need(not bad, f"unknown experiments {bad}; choose from {list(EXPERIMENTS)}")
        bad = [c for c in self.configurations if c not in CONFIGURATIONS]
        need(not bad, f"unknown configurations {bad}; choose from {list(CONFIGURATIONS)}")
        need(self.ica or "ica" not in self.configurations,
             "the 'ica' configuration needs ica=true")
        if self.classifiers is not None:
            bad = [c for c in self.classifiers if c not in load_registry()]
            need(self.classifiers and not bad, f"unknown classifiers {bad}")
            need("stats" not in self.configurations or self.classifiers_for("stats"),
                 f"none of {self.classifiers} runs on statistics vectors; "
                 f"choose from {statistics_configs()}")

    def classifiers_for(self, configuration: str) -> list | None:
        """The requested pipelines that accept this configuration's inputs."""
        if self.classifiers is None or configuration != "stats":
            return self.classifiers
        return [c for c in self.classifiers if c in statistics_configs()]

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(fields))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        for key, value in data.items():
            default = getattr(cls(), key) if key != "classifiers" else None
            if isinstance(default, bool) and not isinstance(value, bool):
                raise ConfigError(f"{key} must be true or false")
            if isinstance(default, (int, float)) and not isinstance(default, bool):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{key} must be a number")
                if isinstance(default, int) and value != int(value):
                    raise ConfigError(f"{key} must be an integer")
                value = type(default)(value)
            if isinstance(default, list) and not isinstance(value, list):
                raise ConfigError(f"{key} must be a list")
            if isinstance(default, str) and not isinstance(value, str):
                raise ConfigError(f"{key} must be a string")
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def preprocess(self, ica: bool) -> PreprocessConfig:
        return PreprocessConfig(self.notch_hz or None, self.notch_q,
                                (self.band_low_hz, self.band_high_hz), self.filter_order,
                                ica, self.ica_threshold)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# ------------------------------------------------------------ stage cache

def _sha(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def digest_files(paths) -> str:
    h = hashlib.sha256()
    for p in sorted(Path(p) for p in paths):
        h.update(p.name.encode())
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()


@dataclass
class StageResult:
    name: str
    status: str
    outputs: list
    digest: str


def run_stage(name: str, directory: Path, inputs: dict, run, report=print) -> StageResult:
    """Run ``run()`` (returning output paths) unless a matching record exists.

    The record ``.stage.json`` stores a hash of ``inputs`` and of the output
    files; both must match for the stage to count as cached.
    """
    record = directory / ".stage.json"
    key = _sha({"stage": name, "version": __version__, **inputs})
    if record.exists():
        try:
            rec = json.loads(record.read_text())
            outputs = [directory / p for p in rec["outputs"]]
            if (rec["key"] == key and all(p.exists() for p in outputs)
                    and digest_files(outputs) == rec["digest"]):
                report(f"[{name}] cached")
                return StageResult(name, "cached", outputs, rec["digest"])
        except (OSError, KeyError, ValueError):
            pass
    try:
        directory.mkdir(parents=True, exist_ok=True)
        outputs = [Path(p) for p in run()]
        digest = digest_files(outputs)
        record.write_text(json.dumps({
            "key": key, "digest": digest,
            "outputs": [str(p.relative_to(directory)) for p in sorted(outputs)],
        }, indent=2) + "\n")
    except Exception as exc:
        raise StageError(name, exc) from exc
    report(f"[{name}] done ({len(outputs)} files)")
    return StageResult(name, "ran", outputs, digest)


# ------------------------------------------------------------- run-all

def session_name(subject: int, session: int) -> str:
    return f"s{subject:02d}_r{session:02d}"


def plan(config: RunConfig) -> dict:
    """Expected artifact counts of ``run_all``."""
    binary = config.subjects * config.replicates if "binary" in config.experiments else 0
    multi = config.replicates if "multiclass" in config.experiments else 0
    return {
        "sessions": config.subjects * config.sessions_per_subject,
        "binary_manifests": binary,
        "multiclass_manifests": multi,
        "report_sets": len(config.experiments) * len(config.configurations),
        "variants": _variants(config),
    }


def _variants(config: RunConfig) -> list[str]:
    need = set()
    for c in config.configurations:
        if c == "base" or (c == "stats" and not config.stats_from_ica):
            need.add("base")
        else:
            need.add("ica")
    return sorted(need)


def _synth_subject(args) -> list[str]:
    subject, config, out = args
    profile = make_subject_profile(subject, config.master_seed)
    paths = []
    for r in range(config.sessions_per_subject):
        schedule = make_schedule(session_seed(config.master_seed, subject, r))
        path = out / f"{session_name(subject, r)}.csv"
        write_session_csv(generate_session(profile, schedule, r), path)
        paths.append(str(path))
    return paths


def _epoch_subject(args) -> tuple[str, list]:
    subject, session_paths, pconfig, out = args
    epochs, ica_info = [], []
    for p in session_paths:
        rec = preprocess_session(read_session_csv(p), pconfig)
        if pconfig.ica:
            ica_info.append({"session": Path(p).stem, "removed": rec.manifest["ica_removed"],
                             "converged": bool(rec.manifest["ica_converged"])})
        epochs.extend(extract_epochs(rec, baseline=pconfig.baseline))
    path = out / f"s{subject:02d}.npz"
    save_epochs_npz(epochs, path)
    return str(path), ica_info


def _map(fn, tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def load_epoch_dir(directory) -> dict:
    out = {}
    for p in sorted(Path(directory).glob("s*.npz")):
        eps = load_epochs_npz(p)
        if eps:
            out[eps[0].subject_id] = eps
    return out


def _binary_datasets(epochs, config: RunConfig):
    return (build_binary(s, epochs, r, config.master_seed)
            for s in sorted(epochs) for r in range(config.replicates))


def _multiclass_datasets(epochs, config: RunConfig):
    return (build_multiclass(epochs, r, config.master_seed) for r in range(config.replicates))


def run_all(config: RunConfig, report=print) -> list[StageResult]:
    root = Path(config.output_root)
    results = []

    sess_dir = root / "sessions"

    def synth_run():
        tasks = [(s, config, sess_dir) for s in range(config.subjects)]
        return [p for ps in _map(_synth_subject, tasks, config.jobs) for p in ps]

    synth = run_stage("synth", sess_dir, {
        "seed": config.master_seed, "subjects": config.subjects,
        "sessions": config.sessions_per_subject,
        "synth": dataclasses.asdict(SynthConfig())}, synth_run, report)
    results.append(synth)

    epoch_stage = {}
    for variant in _variants(config):
        pconfig = config.preprocess(ica=variant == "ica")
        out = root / "epochs" / variant

        def epochs_run(pconfig=pconfig, out=out):
            by_subject = {}
            for p in sorted(synth.outputs):
                by_subject.setdefault(int(Path(p).stem[1:3]), []).append(p)
            tasks = [(s, ps, pconfig, out) for s, ps in sorted(by_subject.items())]
            done = _map(_epoch_subject, tasks, config.jobs)
            paths = [p for p, _ in done]
            if pconfig.ica:
                info = [i for _, infos in done for i in infos]
                summary = out / "ica_summary.json"
                summary.write_text(json.dumps(info, indent=2) + "\n")
                paths.append(str(summary))
            return paths

        epoch_stage[variant] = run_stage(f"epochs:{variant}", out, {
            "sessions": synth.digest, "preprocess": pconfig.as_dict()}, epochs_run, report)
        results.append(epoch_stage[variant])

    ds_dir = root / "datasets"
    key_variant = _variants(config)[0]

    def datasets_run():
        epochs = load_epoch_dir(root / "epochs" / key_variant)
        paths = []
        if "binary" in config.experiments:
            for ds in _binary_datasets(epochs, config):
                s, r = ds.manifest["scope"].split(":")[1], ds.manifest["replicate"]
                path = ds_dir / f"binary_s{int(s):02d}_r{r}.json"
                path.write_text(manifest_json(ds))
                paths.append(path)
        if "multiclass" in config.experiments:
            for ds in _multiclass_datasets(epochs, config):
                path = ds_dir / f"multiclass_r{ds.manifest['replicate']}.json"
                path.write_text(manifest_json(ds))
                paths.append(path)
        return paths

    datasets = run_stage("datasets", ds_dir, {
        "epochs": epoch_stage[key_variant].digest, "seed": config.master_seed,
        "replicates": config.replicates, "experiments": config.experiments}, datasets_run, report)
    results.append(datasets)

    for experiment in config.experiments:
        for configuration in config.configurations:
            if configuration == "base":
                variant = "base"
            elif configuration == "ica":
                variant = "ica"
            else:
                variant = "ica" if config.stats_from_ica else "base"
            out = root / "reports" / f"{experiment}_{configuration}"

            def eval_run(experiment=experiment, configuration=configuration, variant=variant,
                         out=out):
                epochs = load_epoch_dir(root / "epochs" / variant)
                def checked():
                    for ds in (_binary_datasets if experiment == "binary"
                               else _multiclass_datasets)(epochs, config):
                        _check_manifest(ds, ds_dir, experiment)
                        yield ds

                rep = run_experiment(experiment, configuration, checked(),
                                     config.classifiers_for(configuration),
                                     config.master_seed, config.windows, config.stride,
                                     config.jobs)
                return emit_report(rep, out)

            results.append(run_stage(f"evaluate:{experiment}/{configuration}", out, {
                "epochs": epoch_stage[variant].digest, "datasets": datasets.digest,
                "classifiers": config.classifiers_for(configuration), "windows": config.windows,
                "stride": config.stride, "seed": config.master_seed}, eval_run, report))

    summary = {}
    for experiment in config.experiments:
        rows = {}
        for configuration in config.configurations:
            path = root / "reports" / f"{experiment}_{configuration}" / "report.json"
            doc = json.loads(path.read_text())
            top = doc["windows"][-1]
            f1 = [s["f1"] for s in doc["summary"] if s["window"] == top]
            rows[configuration] = {"mean_f1": sum(f1) / len(f1), "window": top,
                                   "per_classifier": {s["classifier"]: s["f1"]
                                                      for s in doc["summary"]
                                                      if s["window"] == top}}
        summary[experiment] = rows
    (root / "reports").mkdir(parents=True, exist_ok=True)
    (root / "reports" / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True)
                                                    + "\n")
    for experiment in config.experiments:
        rows = summary[experiment]
        classifiers = list(dict.fromkeys(c for r in rows.values() for c in r["per_classifier"]))
        values = {(c, conf): r["per_classifier"][c] for conf, r in rows.items()
                  for c in r["per_classifier"]}
        (root / "reports" / f"f1_by_configuration_{experiment}.svg").write_text(bar_chart_svg(
            classifiers, list(rows), values, f"mean f1 by configuration ({experiment})"))
    return results


def _check_manifest(ds, ds_dir: Path, experiment: str) -> None:
    if experiment == "binary":
        s = int(ds.manifest["scope"].split(":")[1])
        path = ds_dir / f"binary_s{s:02d}_r{ds.manifest['replicate']}.json"
    else:
        path = ds_dir / f"multiclass_r{ds.manifest['replicate']}.json"
    if path.read_text() != manifest_json(ds):
        raise RuntimeError(f"dataset {path.name} no longer matches its manifest")


# ------------------------------------------------------------- subcommands

def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in range(args.subjects):
        profile = make_subject_profile(s, args.seed)
        for r in range(args.sessions):
            rec = generate_session(profile, make_schedule(session_seed(args.seed, s, r)), r)
            write_session_csv(rec, out / f"{session_name(s, r)}.csv")
    print(f"wrote {args.subjects * args.sessions} sessions to {out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    if args.input:
        rec = read_session_csv(args.input, args.subject, args.session)
    else:
        rec = stream_ingest(args.endpoint, args.duration, args.subject, args.session,
                            args.timeout)
    write_session_csv(rec, args.out)
    for w in rec.manifest.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)
    print(f"ingested {rec.n_samples} samples, {len(rec.markers)} markers -> {args.out}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    replay(read_session_csv(args.input), args.endpoint, args.connect_timeout, args.realtime)
    return EXIT_OK


def _preprocess_config(args) -> PreprocessConfig:
    return PreprocessConfig(None if args.notch <= 0 else args.notch, args.notch_q,
                            tuple(args.band), args.order, args.ica == "on", args.ica_threshold)


def _cmd_preprocess(args) -> int:
    pconfig = _preprocess_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in args.input:
        rec = preprocess_session(read_session_csv(path), pconfig)
        write_session_csv(rec, out / Path(path).name)
        if pconfig.ica:
            print(f"{Path(path).name}: removed components {rec.manifest['ica_removed']}")
    return EXIT_OK


def _cmd_epochs(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in args.input:
        epochs = extract_epochs(read_session_csv(path), baseline=not args.no_baseline)
        write_epochs_csv(epochs, out / f"{Path(path).stem}_epochs.csv")
    return EXIT_OK


def _read_epoch_inputs(paths) -> list:
    eps = []
    for p in paths:
        p = Path(p)
        files = sorted(p.glob("*.csv")) + sorted(p.glob("*.npz")) if p.is_dir() else [p]
        for f in files:
            eps.extend(load_epochs_npz(f) if f.suffix == ".npz" else read_epochs_csv(f))
    return eps


def _cmd_features(args) -> int:
    epochs = _read_epoch_inputs(args.input)
    vectors = []
    groups = {}
    for e in epochs:
        groups.setdefault((e.subject_id, LABELS[e.label]), []).append(e)
    for (subject, label), block in sorted(groups.items()):
        vectors.extend(sliding_stats(FeatureBlock.from_epochs(block, label, subject),
                                     args.window, args.stride))
    write_features_csv(vectors, args.out)
    print(f"wrote {len(vectors)} feature vectors to {args.out}")
    return EXIT_OK


def _cmd_dataset(args) -> int:
    by_subject = {}
    for e in _read_epoch_inputs(args.epochs):
        by_subject.setdefault(e.subject_id, []).append(e)
    if args.kind == "binary":
        if args.subject is None:
            raise ConfigError("--subject is required for binary datasets")
        ds = build_binary(args.subject, by_subject, args.replicate, args.seed)
    else:
        ds = build_multiclass(by_subject, args.replicate, args.seed)
    if args.window:
        ds = to_statistics(ds, args.window, args.stride)
    data, manifest = save_dataset(ds, args.out)
    print(f"wrote {data} and {manifest} ({ds.n} samples, counts {ds.counts()})")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    experiment = "multiclass" if args.experiment in ("multi", "multiclass") else "binary"
    configuration = {"base": "base", "ica": "ica", "stats": "stats"}[args.config_name]
    datasets = [load_dataset(p) for p in args.datasets]
    windows = [args.window] if args.window else None
    rep = run_experiment(experiment, configuration, datasets, args.classifiers, args.seed,
                         windows, args.stride, args.jobs)
    emit_report(rep, args.out)
    for cid in rep.classifiers:
        print(f"{cid}: mean f1 {rep.mean(cid):.4f}")
    return EXIT_OK


def _cmd_run_all(args) -> int:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.out:
        overrides["output_root"] = args.out
    if overrides:
        config = RunConfig.from_dict({**config.as_dict(), **overrides})
    if args.dry_run:
        print(json.dumps({"config": config.as_dict(), "plan": plan(config)}, indent=2))
        return EXIT_OK
    run_all(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    base.add_argument("--jobs", type=int, default=None, help="worker processes")
    base.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False, parents=[base])
    common.add_argument("--config", help="flat JSON run configuration")

    p = argparse.ArgumentParser(prog="p300auth", description="P300 EEG authentication pipeline")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="simulate session CSVs")
    s.add_argument("--subjects", type=int, default=10)
    s.add_argument("--sessions", type=int, default=20)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("ingest", parents=[common],
                       help="record a stream (or validate a CSV) into a session CSV")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--endpoint", help="HOST:PORT to listen on")
    src.add_argument("--input", help="existing session CSV to validate and normalise")
    s.add_argument("--duration", type=float, default=213.0, help="seconds of stream time")
    s.add_argument("--subject", type=int)
    s.add_argument("--session", type=int)
    s.add_argument("--timeout", type=float, default=10.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_ingest)

    s = sub.add_parser("replay", parents=[common], help="stream a session CSV to an ingester")
    s.add_argument("--input", required=True)
    s.add_argument("--endpoint", required=True)
    s.add_argument("--realtime", action="store_true")
    s.add_argument("--connect-timeout", type=float, default=10.0)
    s.set_defaults(func=_cmd_replay)

    s = sub.add_parser("preprocess", parents=[common], help="filter (and ICA-clean) sessions")
    s.add_argument("--input", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--notch", type=float, default=50.0, help="notch frequency, 0 disables")
    s.add_argument("--notch-q", type=float, default=30.0)
    s.add_argument("--band", type=float, nargs=2, default=(1.0, 17.0), metavar=("LOW", "HIGH"))
    s.add_argument("--order", type=int, default=6)
    s.add_argument("--ica", choices=("on", "off"), default="off")
    s.add_argument("--ica-threshold", type=float, default=0.7)
    s.set_defaults(func=_cmd_preprocess)

    s = sub.add_parser("epochs", parents=[common], help="cut stimulus-locked epochs")
    s.add_argument("--input", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-baseline", action="store_true")
    s.set_defaults(func=_cmd_epochs)

    s = sub.add_parser("features", parents=[common], help="sliding-window statistics")
    s.add_argument("--input", nargs="+", required=True, help="epoch CSV/NPZ files or folders")
    s.add_argument("--window", type=int, choices=WINDOWS, required=True)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_features)

    s = sub.add_parser("dataset", parents=[common], help="build a balanced dataset")
    s.add_argument("--epochs", nargs="+", required=True, help="epoch CSV/NPZ files or folders")
    s.add_argument("--kind", choices=("binary", "multiclass"), required=True)
    s.add_argument("--subject", type=int)
    s.add_argument("--replicate", type=int, default=0)
    s.add_argument("--window", type=int, choices=WINDOWS)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--out", required=True, help="output path stem")
    s.set_defaults(func=_cmd_dataset)

    s = sub.add_parser("evaluate", parents=[base], help="run an experiment on saved datasets")
    s.add_argument("--experiment", choices=("binary", "multi", "multiclass"), required=True)
    s.add_argument("--config", dest="config_name", choices=("base", "ica", "stats"), required=True)
    s.add_argument("--window", type=int, choices=WINDOWS)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--classifiers", nargs="+")
    s.add_argument("--datasets", nargs="+", required=True, help="dataset path stems")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("run-all", parents=[common], help="full pipeline with stage caching")
    s.add_argument("--out", help="output root (overrides the config)")
    s.add_argument("--dry-run", action="store_true", help="print the plan and exit")
    s.set_defaults(func=_cmd_run_all)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "run-all":
        if args.seed is None:
            args.seed = 0
        if args.jobs is None:
            args.jobs = 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (OSError, ValueError, RuntimeError, TimeoutError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
