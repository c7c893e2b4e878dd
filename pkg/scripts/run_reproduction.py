#!/usr/bin/env python3
"""Full-scale reproduction protocol for the shared-task corpora.

Needs real data: point SEGGLOSS_DATA_DIR (or --data-dir) at a directory
of prepared splits (one subdirectory per language code, as written by
`seggloss prepare-data`). Runs the published protocol per language:
multitask at the default loss weight vs the single-task baseline, full
hyperparameters, and prints each row next to its reference target.

Budget roughly: Gitksan (323 train) about an hour on one CPU; Lezgi
(1236 train) a few hours.
"""

import argparse
import os
import sys
from pathlib import Path

from seggloss.harness import REFERENCE_RESULTS, ExperimentSpec, report, run
from seggloss.model import ModelConfig
from seggloss.training import MULTITASK, SINGLE_TASK


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default=os.environ.get("SEGGLOSS_DATA_DIR"))
    parser.add_argument("--results-dir", default="out/reproduction")
    parser.add_argument("--languages", default="git,lez")
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--force", action="store_true")
    args = parser.parse_args()

    if not args.data_dir:
        print(
            "no data directory: set SEGGLOSS_DATA_DIR or pass --data-dir "
            "(prepared shared-task splits are required)",
            file=sys.stderr,
        )
        return 1

    model = ModelConfig()  # full-size defaults
    for language in args.languages.split(","):
        for mode in (MULTITASK, SINGLE_TASK):
            spec = ExperimentSpec(
                language=language,
                mode=mode,
                seed=args.seed,
                max_epochs=args.epochs,
                model=model,
            )
            row = run(spec, args.data_dir, args.results_dir, force=args.force, quiet=False)
            target = REFERENCE_RESULTS.get((language, mode))
            suffix = ""
            if target:
                suffix = (
                    f"   (reference ACC {target['word_accuracy']}"
                    f" F1 {target['morpheme_f1']} ED {target['edit_distance_sum']})"
                )
            print(
                f"{language}/{mode}: ACC {row.word_accuracy:.2f} "
                f"F1 {row.morpheme_f1:.2f} ED {row.edit_distance_sum}{suffix}"
            )

    print()
    print(report(args.results_dir, out_path=Path(args.results_dir) / "report.txt"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
