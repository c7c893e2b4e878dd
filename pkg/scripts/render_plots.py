#!/usr/bin/env python3
"""Render learning-curve and saturation-grid CSVs to PNG plots.

Static rendering only (Agg backend); the CSVs written by the harness are
the source of truth and the plots contain exactly their points.
Requires matplotlib (install the 'plots' extra).
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path


def load_rows(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def plot_curves(rows: list[dict], x_field: str, out_path: Path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for axis, metric, label in (
        (axes[0], "morpheme_f1", "morpheme F1"),
        (axes[1], "word_accuracy", "word accuracy"),
    ):
        series = defaultdict(list)
        for row in rows:
            series[(row["language"], row["mode"])].append((float(row[x_field]), float(row[metric])))
        for (language, mode), points in sorted(series.items()):
            points.sort()
            xs = [p[0] for p in points]
            ys = [p[1] for p in points]
            style = "-o" if mode == "multitask" else "--s"
            axis.plot(xs, ys, style, label=f"{language} {mode}")
        axis.set_xlabel(x_field.replace("_", " "))
        axis.set_ylabel(label)
        axis.grid(True, alpha=0.3)
        axis.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    print(f"wrote {out_path}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", nargs="+", help="harness CSV files to render")
    parser.add_argument("--out-dir", default=None, help="default: alongside each CSV")
    args = parser.parse_args()

    for csv_path in args.csv:
        path = Path(csv_path)
        rows = load_rows(path)
        if not rows:
            print(f"skipping empty {path}", file=sys.stderr)
            continue
        x_field = "train_fraction" if "train_fraction" in rows[0] else "synth_ratio"
        out_dir = Path(args.out_dir) if args.out_dir else path.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        plot_curves(rows, x_field, out_dir / (path.stem + ".png"), path.stem.replace("_", " "))
    return 0


if __name__ == "__main__":
    sys.exit(main())
