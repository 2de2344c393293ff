"""Base vs ICA vs statistics configurations on the same binary datasets.

Evaluates the 21 epoch pipelines on filtered and on ICA-cleaned epochs and
the six statistics pipelines at one window size, then draws a grouped bar
chart of mean f1 per classifier and configuration.

    python scripts/compare_configurations.py --subjects 10 --sessions 20 --out runs/compare
"""
import argparse
import json
import warnings
from pathlib import Path

from p300auth.datasets import build_binary
from p300auth.evaluation import configuration_chart, emit_report, run_experiment
from p300auth.preprocess import PreprocessConfig, corpus_epochs
from p300auth.synth import synth_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=10)
    ap.add_argument("--sessions", type=int, default=20)
    ap.add_argument("--window", type=int, default=232)
    ap.add_argument("--stride", type=int, default=58)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--classifiers", nargs="+", help="restrict the epoch pipelines")
    ap.add_argument("--out", default="runs/compare")
    args = ap.parse_args()

    def epochs(ica):
        recs = (rec for _, rec in synth_corpus(args.subjects, args.sessions, args.seed))
        return corpus_epochs(recs, PreprocessConfig(ica=ica), targets_only=True)

    def datasets(eps):
        return (build_binary(s, eps, 0, args.seed) for s in sorted(eps))

    reports = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        base = epochs(ica=False)
        reports.append(run_experiment("binary", "base", datasets(base), args.classifiers,
                                      args.seed))
        del base
        ica = epochs(ica=True)
        reports.append(run_experiment("binary", "ica", datasets(ica), args.classifiers,
                                      args.seed))
        reports.append(run_experiment("binary", "stats", datasets(ica), seed=args.seed,
                                      windows=[args.window], stride=args.stride))

    out = Path(args.out)
    summary = {}
    for rep in reports:
        emit_report(rep, out / rep.configuration)
        summary[rep.configuration] = rep.overall_mean()
    configuration_chart(reports, out / "f1_by_configuration.svg")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for name, f1 in summary.items():
        print(f"{name:5s} mean f1 over classifiers {f1:.4f}")


if __name__ == "__main__":
    main()
