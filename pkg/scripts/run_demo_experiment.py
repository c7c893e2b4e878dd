#!/usr/bin/env python3
"""End-to-end demo on the bundled Kelto corpus: multitask vs single-task,
a short learning curve, a synthetic mix, and the rendered report.

Small model, CPU, a few minutes total. Results land in out/demo/.
"""

import argparse
import json
import sys
from pathlib import Path

from seggloss.harness import ExperimentSpec, learning_curve, report, run
from seggloss.igt import load_split
from seggloss.model import ModelConfig
from seggloss.synth import FixtureClient, accepted_examples, generate, plan_prompts
from seggloss.training import MULTITASK, SINGLE_TASK

ROOT = Path(__file__).parent.parent
DEMO_MODEL = ModelConfig(
    encoder_layers=2,
    decoder_layers=2,
    attention_heads=4,
    embedding_dim=64,
    hidden_dim=256,
    max_positions=64,
)


def ensure_synth_cache(data_dir: Path, fixtures: Path, cache: Path, budget: int) -> None:
    split, _ = load_split(data_dir / "kel")
    params = json.loads((fixtures / "params.json").read_text(encoding="utf-8"))
    jobs, inventory = plan_prompts(
        split.train,
        n_words=params["n_words"],
        n_morphemes=tuple(params["n_morphemes"]),
        language=params["language"],
        max_stems=params["max_stems"],
    )
    records = generate(FixtureClient(fixtures), jobs, inventory, split.train, budget=budget, cache_path=cache)
    print(f"synthetic cache: {sum(r.accepted for r in records)} accepted -> {cache}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=str(ROOT / "out" / "demo"))
    parser.add_argument("--epochs", type=int, default=120)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    data_dir = ROOT / "data" / "demo" / "prepared"
    fixtures = ROOT / "data" / "demo" / "fixtures"
    results_dir = Path(args.out_dir)
    cache = results_dir / "synth_cache.jsonl"
    ensure_synth_cache(data_dir, fixtures, cache, budget=120)

    common = dict(
        seed=args.seed,
        max_epochs=args.epochs,
        beam_width=5,
        batch_size=400,
        model=DEMO_MODEL,
    )
    for mode in (MULTITASK, SINGLE_TASK):
        row = run(ExperimentSpec(language="kel", mode=mode, **common), data_dir, results_dir)
        print(f"{mode}: ACC {row.word_accuracy:.2f} F1 {row.morpheme_f1:.2f} ED {row.edit_distance_sum}")

    curve = learning_curve("kel", data_dir, results_dir, fractions=(0.5, 1.0), **common)
    for row in curve:
        print(
            f"curve {row.spec['mode']} @{row.spec['train_fraction']}: "
            f"F1 {row.morpheme_f1:.2f}"
        )

    synth_row = run(
        ExperimentSpec(language="kel", mode=MULTITASK, synth_ratio=0.5, **common),
        data_dir,
        results_dir,
        synth_cache=cache,
    )
    print(f"multitask + synth(0.5): ACC {synth_row.word_accuracy:.2f} F1 {synth_row.morpheme_f1:.2f}")

    print()
    print(report(results_dir, out_path=results_dir / "report.txt"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
