"""Kelto: a small invented agglutinative language for demos and tests.

Words are STEM + TENSE + PERSON with an optional interrogative clitic.
Three surface alternations make canonical segmentation non-trivial:

  1. stem-final vowel drops before the vowel-initial present suffix -i
  2. the past suffix -ta voices to -da after a nasal
  3. the future suffix -ne degeminates after stem-final n

The canonical tier always shows underlying forms, so words touched by a
rule have surface != concatenated morphemes (alternating words).
"""

from __future__ import annotations

import random

STEMS = [
    ("luma", "sing"),
    ("tarek", "walk"),
    ("besi", "eat"),
    ("holu", "sleep"),
    ("miran", "see"),
    ("kanto", "speak"),
    ("selu", "swim"),
    ("patir", "hunt"),
    ("nevo", "read"),
    ("zuka", "dance"),
    ("feru", "carry"),
    ("golim", "build"),
    ("sona", "dream"),
    ("vike", "travel"),
    ("rupo", "dig"),
]

TENSES = [("ta", "PST"), ("ne", "FUT"), ("i", "PRS")]
PERSONS = [("mo", "1SG"), ("si", "2SG"), ("ka", "3SG"), ("mon", "1PL")]
CLITIC = ("po", "Q")

VOWELS = "aeiou"
NASALS = "nm"


def surface_form(morphemes: list[str]) -> str:
    """Apply the alternation rules left to right."""
    word = morphemes[0]
    for morpheme in morphemes[1:]:
        if morpheme.startswith("i") and word[-1] in VOWELS:
            word = word[:-1] + morpheme
        elif morpheme == "ta" and word[-1] in NASALS:
            word = word + "da"
        elif morpheme == "ne" and word[-1] == "n":
            word = word + "e"
        else:
            word = word + morpheme
    return word


def build_word(stem: tuple[str, str], tense: tuple[str, str], person: tuple[str, str], question: bool):
    """(surface, canonical segmentation, gloss) for one Kelto word."""
    morphemes = [stem[0], tense[0], person[0]]
    labels = [stem[1], tense[1], person[1]]
    segmentation = "-".join(morphemes)
    gloss = "-".join(labels)
    if question:
        morphemes = morphemes + [CLITIC[0]]
        segmentation += "=" + CLITIC[0]
        gloss += "=" + CLITIC[1]
    return surface_form(morphemes), segmentation, gloss


def all_words() -> list[tuple[str, str, str]]:
    words = []
    for stem in STEMS:
        for tense in TENSES:
            for person in PERSONS:
                for question in (False, True):
                    words.append(build_word(stem, tense, person, question))
    return words


FILLER = ["yesterday", "today", "slowly", "together", "again", "at dawn", "by the river"]


def make_corpus_text(seed: int = 13, n_sentences: int = 120) -> str:
    """IGT blocks of 2-3 word sentences drawn from the full paradigm."""
    rng = random.Random(seed)
    words = all_words()
    blocks = []
    for _ in range(n_sentences):
        picked = [words[rng.randrange(len(words))] for _ in range(rng.choice([2, 3]))]
        surfaces = " ".join(w[0] for w in picked)
        segs = " ".join(w[1] for w in picked)
        glosses = " ".join(w[2] for w in picked)
        meanings = " and ".join(w[2].split("-")[0] for w in picked)
        translation = f"they {meanings} {rng.choice(FILLER)}"
        blocks.append(f"\\t {surfaces}\n\\m {segs}\n\\g {glosses}\n\\l {translation}\n")
    return "\n".join(blocks)
