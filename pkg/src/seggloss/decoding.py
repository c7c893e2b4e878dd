"""Beam decoding for the segmentation and gloss streams.

The beam keeps the top `beam_width` candidates at every step; a candidate
that ends in EOS retires to a finished pool and stops occupying a slot,
so the active set shrinks as hypotheses complete. With width 1 this is
exactly greedy decoding. Scores are summed log-probabilities with no
length normalization; ties resolve toward higher score, then shorter,
then lexicographically smaller id sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import torch

from .errors import SegglossError
from .igt import nfc
from .model import GLOSS, SEGMENTATION, SegGlossModel
from .vocab import BOS, EOS, PAD, Vocabularies, Vocabulary


@dataclass(frozen=True)
class Hypothesis:
    ids: tuple[int, ...]
    log_prob: float
    finished: bool = False
    truncated: bool = False


def _hyp_order(h: Hypothesis):
    return (-h.log_prob, len(h.ids), h.ids)


def default_max_len(source_len: int, max_positions: int) -> int:
    """Symbol budget after BOS; generous for segmentation output, which
    adds at most one delimiter between characters plus alternation slack."""
    return min(2 * source_len + 8, max_positions - 1)


class WordBeam:
    """Beam state for one source word; advance() consumes one step of
    next-symbol log-probabilities for the current active set."""

    def __init__(self, beam_width: int, max_len: int, eos_id: int = EOS, bos_id: int = BOS):
        if beam_width <= 0:
            raise ValueError("beam_width must be positive")
        if max_len <= 0:
            raise ValueError("max_len must be positive")
        self.beam_width = beam_width
        self.max_len = max_len
        self.eos_id = eos_id
        self.active: list[Hypothesis] = [Hypothesis((bos_id,), 0.0)]
        self.finished: list[Hypothesis] = []
        self.truncated: list[Hypothesis] = []

    @property
    def done(self) -> bool:
        return not self.active

    def prefixes(self) -> list[tuple[int, ...]]:
        return [h.ids for h in self.active]

    def advance(self, logps: torch.Tensor) -> None:
        if logps.shape[0] != len(self.active):
            raise SegglossError("advance expects one score row per active hypothesis")
        candidates: list[Hypothesis] = []
        for row, hyp in enumerate(self.active):
            # stable descending sort keeps the lowest symbol id first on ties
            values, indices = torch.sort(logps[row], descending=True, stable=True)
            keep = min(self.beam_width, indices.shape[0])
            for value, idx in zip(values[:keep].tolist(), indices[:keep].tolist()):
                candidates.append(Hypothesis(hyp.ids + (idx,), hyp.log_prob + value))
        candidates.sort(key=_hyp_order)
        next_active: list[Hypothesis] = []
        for hyp in candidates[: self.beam_width]:
            if hyp.ids[-1] == self.eos_id:
                self.finished.append(replace(hyp, finished=True))
            elif len(hyp.ids) - 1 >= self.max_len:
                self.truncated.append(replace(hyp, truncated=True))
            else:
                next_active.append(hyp)
        if next_active and self.finished:
            best_active = max(h.log_prob for h in next_active)
            best_done = max(h.log_prob for h in self.finished)
            # extensions never raise the score, so nothing active can
            # overtake the pool; a tie resolves to the completed hypothesis
            if best_active <= best_done:
                next_active = []
        self.active = next_active

    def results(self) -> list[Hypothesis]:
        """Finished hypotheses best-first; if nothing finished within the
        budget, the truncated ones are returned instead (flagged)."""
        if self.finished:
            return sorted(self.finished, key=_hyp_order)
        return sorted(self.truncated, key=_hyp_order)


def _encode_sources(model: SegGlossModel, vocabs: Vocabularies, surfaces: Sequence[str]):
    rows = []
    for surface in surfaces:
        if not surface:
            raise SegglossError("cannot decode an empty surface form")
        rows.append(vocabs.source.encode(nfc(surface), eos=True))
    width = max(len(r) for r in rows)
    src = torch.full((len(rows), width), PAD, dtype=torch.long)
    for i, row in enumerate(rows):
        src[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    mask = src != PAD
    return model.encode(src, mask), mask


def _run_beams(model: SegGlossModel, stream: str, states, mask, beams: list[WordBeam]) -> None:
    while True:
        live = [i for i, b in enumerate(beams) if not b.done]
        if not live:
            return
        owners: list[int] = []
        rows: list[tuple[int, ...]] = []
        counts: list[int] = []
        for i in live:
            prefixes = beams[i].prefixes()
            counts.append(len(prefixes))
            for ids in prefixes:
                owners.append(i)
                rows.append(ids)
        # beams advance in lockstep, so every live prefix has equal length
        prefix = torch.tensor(rows, dtype=torch.long)
        index = torch.tensor(owners, dtype=torch.long)
        logps = model.decode_step(stream, states[index], mask[index], prefix)
        offset = 0
        for i, count in zip(live, counts):
            beams[i].advance(logps[offset : offset + count])
            offset += count


@dataclass
class Prediction:
    surface: str
    segmentation: str
    gloss: str | None = None
    seg_score: float = 0.0
    gloss_score: float = 0.0
    seg_truncated: bool = False
    gloss_truncated: bool = False


def ids_to_text(ids: Iterable[int], vocab: Vocabulary) -> str:
    return "".join(vocab.decode(ids))


def beam_search(
    model: SegGlossModel,
    vocabs: Vocabularies,
    surface: str,
    stream: str = SEGMENTATION,
    beam_width: int = 5,
    max_len: int | None = None,
) -> Hypothesis:
    """Best hypothesis for one word on one stream."""
    model.eval()
    with torch.no_grad():
        states, mask = _encode_sources(model, vocabs, [surface])
        if max_len is None:
            max_len = default_max_len(len(nfc(surface)), model.config.max_positions)
        beam = WordBeam(beam_width, max_len)
        _run_beams(model, stream, states, mask, [beam])
    return beam.results()[0]


def decode_corpus(
    model: SegGlossModel,
    vocabs: Vocabularies,
    surfaces: Sequence[str],
    beam_width: int = 5,
    batch_size: int = 32,
    max_len: int | None = None,
) -> list[Prediction]:
    """Decode every surface on the segmentation stream and, when the model
    has a gloss decoder, the gloss stream. Batched for throughput but
    step-for-step identical to decoding each word alone."""
    if batch_size <= 0:
        raise ValueError("batch_size must be positive")
    predictions: list[Prediction] = []
    model.eval()
    with torch.no_grad():
        for start in range(0, len(surfaces), batch_size):
            chunk = [nfc(s) for s in surfaces[start : start + batch_size]]
            states, mask = _encode_sources(model, vocabs, chunk)
            budgets = [
                max_len if max_len is not None else default_max_len(len(s), model.config.max_positions)
                for s in chunk
            ]
            streams = [SEGMENTATION] + ([GLOSS] if model.multitask else [])
            best: dict[str, list[Hypothesis]] = {}
            for stream in streams:
                beams = [WordBeam(beam_width, budget) for budget in budgets]
                _run_beams(model, stream, states, mask, beams)
                best[stream] = [beam.results()[0] for beam in beams]
            for i, surface in enumerate(chunk):
                seg = best[SEGMENTATION][i]
                pred = Prediction(
                    surface=surface,
                    segmentation=ids_to_text(seg.ids, vocabs.segmentation),
                    seg_score=seg.log_prob,
                    seg_truncated=seg.truncated,
                )
                if model.multitask:
                    gloss = best[GLOSS][i]
                    pred.gloss = ids_to_text(gloss.ids, vocabs.gloss)
                    pred.gloss_score = gloss.log_prob
                    pred.gloss_truncated = gloss.truncated
                predictions.append(pred)
    return predictions


def write_predictions(path, predictions: Sequence[Prediction]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(f"{p.surface}\t{p.segmentation}\t{p.gloss or ''}\n")


def read_predictions(path) -> list[tuple[str, str, str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise SegglossError(f"{path}:{line_no}: expected 3 tab-separated columns")
            rows.append((parts[0], parts[1], parts[2]))
    return rows
