#!/usr/bin/env python3
"""Regenerate offline LLM response fixtures for the Kelto demo corpus.

Each fixture file is named by the hash of the prompt it answers, so the
files here pair exactly with the prompts planned from the committed
prepared split. Responses are mostly well-formed novel words built with
the real Kelto rules, plus a few deliberately defective lines so the
validator's reject paths stay exercised: a misaligned gloss, an unknown
grammatical label, an exact train duplicate, a wrong-stem word, and one
reply that is pure chatter.

A params.json sits next to the fixtures so consumers can re-plan the
identical prompts.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
import kelto  # noqa: E402

from seggloss.igt import load_split  # noqa: E402
from seggloss.synth import FixtureClient, plan_prompts  # noqa: E402

PARAMS = {"n_words": 8, "n_morphemes": [2, 5], "language": "Kelto", "max_stems": 15}


def paradigm_for(stem_form: str) -> list[tuple[str, str, str]]:
    stems = [s for s in kelto.STEMS if s[0] == stem_form]
    if not stems:
        return []
    words = []
    for tense in kelto.TENSES:
        for person in kelto.PERSONS:
            for question in (False, True):
                words.append(kelto.build_word(stems[0], tense, person, question))
    return words


def response_text(lines: list[str], stem: str) -> str:
    numbered = []
    for i, line in enumerate(lines, start=1):
        numbered.append(f"{i}. {line}")
    body = "\n\n".join(numbered)
    return (
        f'Here are new words built from the stem "{stem}", '
        "in the same format as the examples:\n\n" + body + "\n"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    root = Path(__file__).parent.parent
    parser.add_argument("--data-dir", default=str(root / "data" / "demo" / "prepared"))
    parser.add_argument("--out-dir", default=str(root / "data" / "demo" / "fixtures"))
    args = parser.parse_args()

    split, _ = load_split(Path(args.data_dir) / "kel")
    train_keys = {ex.key for ex in split.train}
    jobs, inventory = plan_prompts(
        split.train,
        n_words=PARAMS["n_words"],
        n_morphemes=tuple(PARAMS["n_morphemes"]),
        language=PARAMS["language"],
        max_stems=PARAMS["max_stems"],
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for stale in out_dir.glob("*.txt"):
        stale.unlink()
    client = FixtureClient(out_dir)

    def triple_line(surface, seg, gloss):
        return f"word: {surface}, canonical segmentation: {seg}, gloss: {gloss}"

    written = 0
    for index, job in enumerate(jobs):
        stem = job.stem.stem
        novel = [w for w in paradigm_for(stem) if (w[0], w[1], w[2]) not in train_keys]
        lines = [triple_line(*w) for w in novel[: PARAMS["n_words"]]]
        if index == 0 and lines:
            # misaligned: drop one gloss label
            surface, seg, gloss = novel[0]
            lines[0] = triple_line(surface, seg, gloss.rsplit("-", 1)[0])
        elif index == 1 and lines:
            # unknown grammatical label
            surface, seg, gloss = novel[0]
            lines[0] = triple_line(surface, seg, gloss.replace(gloss.split("-")[1], "XX9", 1))
        elif index == 2 and split.train:
            # exact duplicate of a gold training triple for this stem
            dup = next((ex for ex in split.train if _stem_matches(ex, stem)), split.train[0])
            lines.insert(0, triple_line(dup.surface, dup.segmentation, dup.gloss))
        elif index == 3 and lines:
            # built on a different stem than the one requested
            other = next(w for s, _ in kelto.STEMS if s != stem for w in paradigm_for(s)[:1])
            lines[0] = triple_line(*other)
        if index == 4:
            text = "I am sorry, I cannot help with that request today."
        else:
            text = response_text(lines, stem)
        client.path_for(job.prompt).write_text(text, encoding="utf-8")
        written += 1

    (out_dir / "params.json").write_text(json.dumps(PARAMS, indent=2) + "\n", encoding="utf-8")
    print(f"{written} fixture responses -> {out_dir} (inventory size {len(inventory)})")
    return 0


def _stem_matches(ex, stem: str) -> bool:
    return bool(ex.canonical_morphemes) and ex.canonical_morphemes[0] == stem


if __name__ == "__main__":
    sys.exit(main())
