"""Mean f1 of the statistics-mode classifiers as a function of window size.

Builds one binary dataset per subject from ICA-cleaned target epochs and
evaluates W in {58, 116, 174, 232}.  Writes the usual report files
(``f1_by_window.svg`` among them) to ``--out``.

    python scripts/window_sweep.py --subjects 10 --sessions 20 --stride 58 --out runs/sweep
"""
import argparse

from p300auth.datasets import build_binary
from p300auth.evaluation import emit_report, run_experiment
from p300auth.features import WINDOWS
from p300auth.preprocess import PreprocessConfig, corpus_epochs
from p300auth.synth import synth_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=10)
    ap.add_argument("--sessions", type=int, default=20)
    ap.add_argument("--stride", type=int, default=58)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-ica", action="store_true")
    ap.add_argument("--out", default="runs/window_sweep")
    args = ap.parse_args()

    recs = (rec for _, rec in synth_corpus(args.subjects, args.sessions, args.seed))
    epochs = corpus_epochs(recs, PreprocessConfig(ica=not args.no_ica), targets_only=True)
    datasets = (build_binary(s, epochs, 0, args.seed) for s in sorted(epochs))
    report = run_experiment("binary", "stats", datasets, seed=args.seed,
                            windows=list(WINDOWS), stride=args.stride)
    emit_report(report, args.out)

    print("classifier " + " ".join(f"W={w:<4d}" for w in report.windows))
    for cid in report.classifiers:
        print(f"{cid:10s} " + " ".join(f"{report.mean(cid, window=w):.4f}"
                                       for w in report.windows))


if __name__ == "__main__":
    main()
