"""Evaluation measures: word accuracy, morpheme F1, and summed edit distance.

All comparisons are case-sensitive after Unicode NFC normalization.
Morpheme F1 is micro-averaged multiset overlap; a position-sensitive
variant is reported alongside as a diagnostic.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import SegglossError
from .igt import DEFAULT_DELIMITERS, nfc, split_token


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute edit distance."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _check_pairs(pairs) -> list[tuple[str, str]]:
    if not pairs:
        raise SegglossError("metric computed over an empty list of word pairs")
    return [(nfc(gold), nfc(pred)) for gold, pred in pairs]


def word_accuracy(pairs) -> float:
    """Percentage of exact string matches between gold and prediction."""
    normalized = _check_pairs(pairs)
    hits = sum(1 for gold, pred in normalized if gold == pred)
    return 100.0 * hits / len(normalized)


def morphemes_of(text: str, delimiters=DEFAULT_DELIMITERS) -> list[str]:
    pieces, _ = split_token(text, delimiters)
    return [p for p in pieces if p]


def morpheme_f1(pairs, delimiters=DEFAULT_DELIMITERS) -> tuple[float, float, float]:
    """Micro-averaged (precision, recall, f1) over per-word morpheme multisets."""
    normalized = _check_pairs(pairs)
    tp = 0
    n_gold = 0
    n_pred = 0
    for gold, pred in normalized:
        gold_ms = Counter(morphemes_of(gold, delimiters))
        pred_ms = Counter(morphemes_of(pred, delimiters))
        tp += sum((gold_ms & pred_ms).values())
        n_gold += sum(gold_ms.values())
        n_pred += sum(pred_ms.values())
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def positional_morpheme_f1(pairs, delimiters=DEFAULT_DELIMITERS) -> tuple[float, float, float]:
    """Position-sensitive variant: a morpheme counts only at its gold index."""
    normalized = _check_pairs(pairs)
    tp = 0
    n_gold = 0
    n_pred = 0
    for gold, pred in normalized:
        gold_ms = morphemes_of(gold, delimiters)
        pred_ms = morphemes_of(pred, delimiters)
        tp += sum(1 for g, p in zip(gold_ms, pred_ms) if g == p)
        n_gold += len(gold_ms)
        n_pred += len(pred_ms)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def edit_distance_sum(pairs) -> int:
    """Sum of edit distances between gold and predicted strings,
    delimiter characters included."""
    normalized = _check_pairs(pairs)
    return sum(levenshtein(gold, pred) for gold, pred in normalized)


@dataclass
class EvalReport:
    """Corpus-level scores plus per-word diagnostics.

    Percentages throughout; `edit_distance_sum` is a plain count.
    """

    word_accuracy: float
    morpheme_precision: float
    morpheme_recall: float
    morpheme_f1: float
    edit_distance_sum: int
    n_words: int
    positional_f1: float = 0.0
    per_word: list[tuple[str, str, int]] = field(default_factory=list)

    def to_dict(self, with_diagnostics: bool = False) -> dict:
        out = {
            "word_accuracy": self.word_accuracy,
            "morpheme_precision": self.morpheme_precision,
            "morpheme_recall": self.morpheme_recall,
            "morpheme_f1": self.morpheme_f1,
            "edit_distance_sum": self.edit_distance_sum,
            "n_words": self.n_words,
            "positional_f1": self.positional_f1,
        }
        if with_diagnostics:
            out["per_word"] = [list(row) for row in self.per_word]
        return out

    def summary(self) -> str:
        return (
            f"ACC {self.word_accuracy:.2f}  F1 {self.morpheme_f1:.2f}  "
            f"ED {self.edit_distance_sum}  (n={self.n_words})"
        )


def evaluate_pairs(pairs, delimiters=DEFAULT_DELIMITERS) -> EvalReport:
    """Assemble the full report for (gold, predicted) segmentation pairs."""
    normalized = _check_pairs(pairs)
    precision, recall, f1 = morpheme_f1(normalized, delimiters)
    _, _, pos_f1 = positional_morpheme_f1(normalized, delimiters)
    per_word = [(gold, pred, levenshtein(gold, pred)) for gold, pred in normalized]
    return EvalReport(
        word_accuracy=word_accuracy(normalized),
        morpheme_precision=100.0 * precision,
        morpheme_recall=100.0 * recall,
        morpheme_f1=100.0 * f1,
        edit_distance_sum=sum(d for _, _, d in per_word),
        n_words=len(normalized),
        positional_f1=100.0 * pos_f1,
        per_word=per_word,
    )
