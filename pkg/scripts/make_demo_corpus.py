#!/usr/bin/env python3
"""Regenerate the bundled Kelto demo corpus and its prepared split.

Deterministic: committing the outputs and re-running this script must
produce byte-identical files.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
import kelto  # noqa: E402

from seggloss.igt import extract_word_examples, parse_igt_text, split_unique_words, write_split  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=str(Path(__file__).parent.parent / "data" / "demo"))
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--sentences", type=int, default=120)
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = kelto.make_corpus_text(seed=args.seed, n_sentences=args.sentences)
    corpus_path = out_dir / "kelto.igt"
    corpus_path.write_text(text, encoding="utf-8")

    result = parse_igt_text(text, strict=True)
    examples = extract_word_examples(result.entries, language="kel")
    split = split_unique_words(examples, seed=0)
    write_split(split, out_dir / "prepared" / "kel", language="kel")

    n_alternating = sum(1 for ex in split.train if ex.alternating)
    print(f"corpus: {len(result.entries)} sentences -> {corpus_path}")
    print(
        f"split: {len(split.train)} train ({n_alternating} alternating) / "
        f"{len(split.dev)} dev / {len(split.test)} test"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
