"""Symbol vocabularies and the tokenization of the two output streams.

The segmentation stream is plain characters: delimiter characters are
ordinary symbols, so rendering a hypothesis is string concatenation.
The gloss stream mixes character symbols (for lexical labels), atomic
symbols (for grammatical labels such as ``1SG.II``), and the delimiter
characters as morpheme boundaries, e.g. ``work-1SG.II`` becomes
``w o r k - 1SG.II``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import VocabularyError
from .igt import DEFAULT_DELIMITERS, DataSplit, split_token

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")


class Vocabulary:
    """Bidirectional symbol/id map with reserved control ids 0..3."""

    def __init__(self, symbols: Sequence[str]):
        if tuple(symbols[:4]) != RESERVED:
            raise VocabularyError("symbols must start with the reserved control symbols")
        if len(set(symbols)) != len(symbols):
            raise VocabularyError("duplicate symbols in vocabulary")
        self.symbols: tuple[str, ...] = tuple(symbols)
        self._ids = {s: i for i, s in enumerate(self.symbols)}

    @classmethod
    def from_symbols(cls, corpus_symbols: Iterable[str]) -> "Vocabulary":
        unique = sorted(set(corpus_symbols))
        for sym in unique:
            if sym in RESERVED:
                raise VocabularyError(f"corpus symbol collides with reserved symbol {sym!r}")
            if sym == "":
                raise VocabularyError("empty string cannot be a vocabulary symbol")
        return cls(RESERVED + tuple(unique))

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def id(self, symbol: str) -> int:
        """The id of a symbol, UNK for out-of-vocabulary symbols."""
        return self._ids.get(symbol, UNK)

    def symbol(self, idx: int) -> str:
        return self.symbols[idx]

    def encode(self, symbols: Iterable[str], bos: bool = False, eos: bool = False) -> list[int]:
        ids = [self._ids.get(s, UNK) for s in symbols]
        if bos:
            ids.insert(0, BOS)
        if eos:
            ids.append(EOS)
        return ids

    def decode(self, ids: Iterable[int], strip_control: bool = True) -> list[str]:
        out = []
        for i in ids:
            if strip_control and i < len(RESERVED):
                continue
            out.append(self.symbols[i])
        return out

    def to_list(self) -> list[str]:
        return list(self.symbols)


def is_grammatical_label(label: str) -> bool:
    """Grammatical labels carry no lowercase letters (``1SG.II``, ``LOC``)."""
    return not any(ch.islower() for ch in label)


def tokenize_gloss(
    labels: Sequence[str],
    delims: Sequence[str] | None = None,
) -> list[str]:
    """Symbol sequence for a gloss: lexical labels become characters,
    grammatical labels stay atomic, delimiters join the label groups."""
    if not labels:
        raise ValueError("gloss label list is empty")
    if delims is None:
        delims = ["-"] * (len(labels) - 1)
    if len(delims) != len(labels) - 1:
        raise ValueError("need exactly one delimiter between each pair of labels")
    out: list[str] = []
    for i, label in enumerate(labels):
        if i:
            out.append(delims[i - 1])
        if is_grammatical_label(label):
            out.append(label)
        else:
            out.extend(label)
    return out


def tokenize_gloss_string(gloss: str, delimiters=DEFAULT_DELIMITERS) -> list[str]:
    """Tokenize a raw gloss-tier token. Inverse of `detokenize_gloss` for
    any token, including ones with empty pieces."""
    pieces, seps = split_token(gloss, delimiters)
    out: list[str] = []
    for i, piece in enumerate(pieces):
        if i:
            out.append(seps[i - 1])
        if not piece:
            continue
        if is_grammatical_label(piece):
            out.append(piece)
        else:
            out.extend(piece)
    return out


def detokenize_gloss(symbols: Iterable[str]) -> str:
    return "".join(symbols)


def tokenize_segmentation(segmentation: str) -> list[str]:
    return list(segmentation)


def detokenize_segmentation(symbols: Iterable[str]) -> str:
    return "".join(symbols)


class Vocabularies(NamedTuple):
    source: Vocabulary
    segmentation: Vocabulary
    gloss: Vocabulary

    def for_stream(self, stream: str) -> Vocabulary:
        if stream == "segmentation":
            return self.segmentation
        if stream == "gloss":
            return self.gloss
        raise ValueError(f"unknown stream {stream!r}")

    def to_dict(self) -> dict:
        return {
            "source": self.source.to_list(),
            "segmentation": self.segmentation.to_list(),
            "gloss": self.gloss.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabularies":
        return cls(
            source=Vocabulary(data["source"]),
            segmentation=Vocabulary(data["segmentation"]),
            gloss=Vocabulary(data["gloss"]),
        )


def build_vocabularies(
    split_or_train: DataSplit | Sequence,
    delimiters=DEFAULT_DELIMITERS,
) -> Vocabularies:
    """Vocabularies derived from the training part only; deterministic
    (sorted) symbol order, so identical splits give identical ids."""
    train = split_or_train.train if isinstance(split_or_train, DataSplit) else split_or_train
    if not train:
        raise VocabularyError("cannot build vocabularies from an empty training set")
    source_syms: set[str] = set()
    seg_syms: set[str] = set()
    gloss_syms: set[str] = set()
    for ex in train:
        source_syms.update(ex.surface)
        seg_syms.update(tokenize_segmentation(ex.segmentation))
        gloss_syms.update(tokenize_gloss_string(ex.gloss, delimiters))
    return Vocabularies(
        source=Vocabulary.from_symbols(source_syms),
        segmentation=Vocabulary.from_symbols(seg_syms),
        gloss=Vocabulary.from_symbols(gloss_syms),
    )


@dataclass(frozen=True)
class EncodedExample:
    """Id sequences ready for batching; targets carry BOS...EOS."""

    source: tuple[int, ...]
    seg_target: tuple[int, ...]
    gloss_target: tuple[int, ...]

    @property
    def target_tokens(self) -> int:
        return len(self.seg_target) - 1  # positions the decoder must predict


def encode_example(ex, vocabs: Vocabularies, delimiters=DEFAULT_DELIMITERS) -> EncodedExample:
    return EncodedExample(
        source=tuple(vocabs.source.encode(ex.surface, eos=True)),
        seg_target=tuple(vocabs.segmentation.encode(tokenize_segmentation(ex.segmentation), bos=True, eos=True)),
        gloss_target=tuple(vocabs.gloss.encode(tokenize_gloss_string(ex.gloss, delimiters), bos=True, eos=True)),
    )
