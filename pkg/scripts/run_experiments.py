"""Full run: synthesis, preprocessing, datasets and all experiment reports.

Thin wrapper over ``p300auth run-all`` with a few presets.  ``--preset quick``
shrinks the corpus and the classifier list for a smoke run; ``--preset full``
uses every default (stride 1 statistics is very slow on a single core, so
``--stride`` is exposed).

    python scripts/run_experiments.py --preset quick --out runs/quick
    python scripts/run_experiments.py --preset full --stride 29 --jobs 4 --out runs/full
"""
import argparse
import json
from pathlib import Path

from p300auth.cli import RunConfig, plan, run_all

PRESETS = {
    "quick": {"subjects": 3, "sessions_per_subject": 2, "replicates": 1,
              "windows": [58, 232], "stride": 58, "classifiers": ["Cl2", "Cl5", "Cl6", "Cl9"]},
    "full": {},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=sorted(PRESETS), default="quick")
    ap.add_argument("--out", default="runs/experiments")
    ap.add_argument("--stride", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    settings = {**PRESETS[args.preset], "output_root": args.out, "jobs": args.jobs,
                "master_seed": args.seed}
    if args.stride:
        settings["stride"] = args.stride
    config = RunConfig.from_dict(settings)
    print(json.dumps(plan(config), indent=2))
    run_all(config)

    summary = json.loads((Path(args.out) / "reports" / "summary.json").read_text())
    for experiment, rows in summary.items():
        for configuration, row in rows.items():
            print(f"{experiment:10s} {configuration:5s} mean f1 {row['mean_f1']:.4f}")


if __name__ == "__main__":
    main()
