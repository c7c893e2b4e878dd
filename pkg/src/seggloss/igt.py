"""Interlinear glossed text: parsing, word extraction, and deterministic splits.

Corpus files follow the SIGMORPHON 2023 shared-task layout: UTF-8 text,
entries separated by blank lines, tiers marked ``\\t `` (transcription),
``\\m `` (morphemes), ``\\g `` (gloss), ``\\l `` (translation).
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import EmptyCorpusError, ParseError, SegglossError

DEFAULT_DELIMITERS = ("-", "=")

TIER_MARKERS = {
    "\\t": "transcription",
    "\\m": "segmentation",
    "\\g": "gloss",
    "\\l": "translation",
}
REQUIRED_TIERS = ("transcription", "segmentation", "gloss")

LANGUAGE_NAMES = {
    "arp": "Arapaho",
    "ddo": "Tsez",
    "git": "Gitksan",
    "kel": "Kelto",
    "lez": "Lezgi",
    "ntu": "Natügu",
    "nyb": "Nyangbo",
    "usp": "Uspanteko",
}


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class IGTEntry:
    """One four-tier entry; tiers are raw whitespace-tokenizable lines."""

    transcription: str
    segmentation: str
    gloss: str
    translation: str | None = None
    line: int = 0

    def token_counts(self) -> tuple[int, int, int]:
        return (
            len(self.transcription.split()),
            len(self.segmentation.split()),
            len(self.gloss.split()),
        )

    def aligned(self) -> bool:
        a, b, c = self.token_counts()
        return a == b == c


@dataclass(frozen=True)
class ParseIssue:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass
class ParseResult:
    entries: list[IGTEntry]
    issues: list[ParseIssue] = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def split_token(token: str, delimiters=DEFAULT_DELIMITERS) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split a tier token on morpheme delimiters, keeping the separators.

    Returns (pieces, separators); pieces may contain empty strings when the
    token has leading, trailing, or doubled delimiters, so that
    interleaving pieces and separators always reconstructs the token.
    """
    pattern = "([" + re.escape("".join(delimiters)) + "])"
    chunks = re.split(pattern, token)
    return tuple(chunks[::2]), tuple(chunks[1::2])


def join_morphemes(pieces, separators) -> str:
    if len(pieces) != len(separators) + 1:
        raise ValueError("pieces and separators do not interleave")
    out = [pieces[0]]
    for sep, piece in zip(separators, pieces[1:]):
        out.append(sep)
        out.append(piece)
    return "".join(out)


@dataclass(frozen=True)
class WordExample:
    """One training unit: a surface word with its canonical analysis.

    ``segmentation`` and ``gloss`` keep the tier tokens character-exact;
    the morpheme tuples are the parsed views. ``alignment_warning`` marks
    examples whose morpheme and gloss counts disagree or whose tokens
    contain empty pieces; they are kept, never silently dropped.
    """

    surface: str
    segmentation: str
    gloss: str
    language: str = ""
    canonical_morphemes: tuple[str, ...] = ()
    seg_delims: tuple[str, ...] = ()
    gloss_morphemes: tuple[str, ...] = ()
    gloss_delims: tuple[str, ...] = ()
    alignment_warning: bool = False
    synthetic: bool = False

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.surface, self.segmentation, self.gloss)

    @property
    def alternating(self) -> bool:
        """True when the canonical morphemes do not concatenate to the surface."""
        return "".join(self.canonical_morphemes) != self.surface


def word_example(
    surface: str,
    segmentation: str,
    gloss: str,
    language: str = "",
    delimiters=DEFAULT_DELIMITERS,
    synthetic: bool = False,
) -> WordExample:
    """Build a WordExample from raw tier tokens, flagging misalignments."""
    surface = nfc(surface)
    segmentation = nfc(segmentation)
    gloss = nfc(gloss)
    if not surface or any(ch.isspace() for ch in surface):
        raise SegglossError(f"surface token {surface!r} is empty or contains whitespace")
    seg_pieces, seg_delims = split_token(segmentation, delimiters)
    gloss_pieces, gloss_delims = split_token(gloss, delimiters)
    warning = (
        len(seg_pieces) != len(gloss_pieces)
        or any(p == "" for p in seg_pieces)
        or any(p == "" for p in gloss_pieces)
    )
    return WordExample(
        surface=surface,
        segmentation=segmentation,
        gloss=gloss,
        language=language,
        canonical_morphemes=tuple(p for p in seg_pieces if p),
        seg_delims=seg_delims,
        gloss_morphemes=tuple(p for p in gloss_pieces if p),
        gloss_delims=gloss_delims,
        alignment_warning=warning,
        synthetic=synthetic,
    )


def parse_igt_text(text: str, strict: bool = False) -> ParseResult:
    """Parse IGT entries from a string. See `parse_igt_corpus`."""
    entries: list[IGTEntry] = []
    issues: list[ParseIssue] = []
    saw_block = False

    def problem(line_no: int, message: str) -> None:
        if strict:
            raise ParseError(message, line=line_no)
        issues.append(ParseIssue(line=line_no, message=message))

    block: dict[str, tuple[int, str]] = {}
    block_start = 0
    dropped = False

    def flush() -> None:
        nonlocal block, dropped
        if block and not dropped:
            missing = [t for t in REQUIRED_TIERS if t not in block]
            if missing:
                problem(block_start, f"entry is missing tier(s): {', '.join(missing)}")
            else:
                entries.append(
                    IGTEntry(
                        transcription=block["transcription"][1],
                        segmentation=block["segmentation"][1],
                        gloss=block["gloss"][1],
                        translation=block.get("translation", (0, None))[1],
                        line=block_start,
                    )
                )
        block = {}
        dropped = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = nfc(raw.rstrip("\n"))
        if not line.strip():
            flush()
            continue
        saw_block = True
        if not block:
            block_start = line_no
        marker, _, rest = line.partition(" ")
        tier = TIER_MARKERS.get(marker)
        if tier is None:
            # a stray line does not invalidate an otherwise complete entry
            problem(line_no, f"unrecognized tier marker {line.split()[0]!r}")
            continue
        content = rest.strip()
        if tier in REQUIRED_TIERS and not content:
            problem(line_no, f"{tier} tier has no tokens")
            dropped = True
            continue
        if tier in block:
            problem(line_no, f"duplicate {tier} tier in entry")
            dropped = True
            continue
        block[tier] = (line_no, content)
    flush()

    if not saw_block:
        raise EmptyCorpusError("empty corpus")
    return ParseResult(entries=entries, issues=issues)


def parse_igt_corpus(path: str | Path, strict: bool = False) -> ParseResult:
    """Parse an IGT corpus file into entries.

    Malformed entries yield structured parse issues with line numbers;
    `strict=True` raises on the first problem instead of collecting.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return parse_igt_text(text, strict=strict)
    except EmptyCorpusError:
        raise EmptyCorpusError(f"empty corpus: {path}") from None


@dataclass
class ExtractionResult:
    examples: list[WordExample]
    issues: list[ParseIssue] = field(default_factory=list)

    def __iter__(self):
        return iter(self.examples)

    def __len__(self) -> int:
        return len(self.examples)


def extract_word_examples(
    entries,
    language: str = "",
    delimiters=DEFAULT_DELIMITERS,
) -> ExtractionResult:
    """Turn entries into word-level examples, one per aligned token triple.

    Entries whose three tiers disagree on token count contribute nothing
    and are recorded as issues (indexed by entry order and source line).
    """
    examples: list[WordExample] = []
    issues: list[ParseIssue] = []
    for index, entry in enumerate(entries):
        counts = entry.token_counts()
        if not entry.aligned():
            issues.append(
                ParseIssue(
                    line=entry.line,
                    message=f"entry {index}: tier token counts differ {counts}, skipped",
                )
            )
            continue
        triples = zip(
            entry.transcription.split(),
            entry.segmentation.split(),
            entry.gloss.split(),
        )
        for surface, seg_tok, gloss_tok in triples:
            examples.append(
                word_example(surface, seg_tok, gloss_tok, language=language, delimiters=delimiters)
            )
    return ExtractionResult(examples=examples, issues=issues)


@dataclass
class DataSplit:
    train: list[WordExample]
    dev: list[WordExample]
    test: list[WordExample]
    seed: int

    def parts(self):
        return {"train": self.train, "dev": self.dev, "test": self.test}


def split_unique_words(examples, seed: int) -> DataSplit:
    """Deduplicate on (surface, segmentation, gloss), shuffle, split 6:2:2.

    Sizes follow floor(0.6 n) / floor(0.2 n) with the remainder going to
    test, which is the arithmetic the published per-language counts obey.
    Same seed, same input order: byte-identical split.
    """
    seen: set[tuple[str, str, str]] = set()
    unique: list[WordExample] = []
    for ex in examples:
        if ex.key in seen:
            continue
        seen.add(ex.key)
        unique.append(ex)
    if len(unique) < 5:
        raise SegglossError(f"need at least 5 unique examples to split, got {len(unique)}")
    rng = random.Random(seed)
    rng.shuffle(unique)
    n = len(unique)
    n_train = int(n * 0.6)
    n_dev = int(n * 0.2)
    return DataSplit(
        train=unique[:n_train],
        dev=unique[n_train : n_train + n_dev],
        test=unique[n_train + n_dev :],
        seed=seed,
    )


def split_sizes(n: int) -> tuple[int, int, int]:
    """The 6:2:2 sizes for n unique words (train, dev, test)."""
    n_train = int(n * 0.6)
    n_dev = int(n * 0.2)
    return n_train, n_dev, n - n_train - n_dev


# ---------------------------------------------------------------------------
# Split files: one record per line, surface<TAB>segmentation<TAB>gloss.
# ---------------------------------------------------------------------------

def write_examples_file(path: str | Path, examples) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(f"{ex.surface}\t{ex.segmentation}\t{ex.gloss}\n")


def read_examples_file(
    path: str | Path,
    language: str = "",
    delimiters=DEFAULT_DELIMITERS,
    synthetic: bool = False,
) -> list[WordExample]:
    examples = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", line=line_no)
        examples.append(
            word_example(*fields, language=language, delimiters=delimiters, synthetic=synthetic)
        )
    return examples


def write_split(split: DataSplit, out_dir: str | Path, language: str = "", delimiters=DEFAULT_DELIMITERS) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in split.parts().items():
        write_examples_file(out_dir / f"{name}.tsv", part)
    manifest = {
        "language": language,
        "seed": split.seed,
        "delimiters": list(delimiters),
        "sizes": {name: len(part) for name, part in split.parts().items()},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load_split(prepared_dir: str | Path) -> tuple[DataSplit, dict]:
    prepared_dir = Path(prepared_dir)
    manifest_path = prepared_dir / "manifest.json"
    if not manifest_path.exists():
        raise SegglossError(f"not a prepared data directory (no manifest.json): {prepared_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    language = manifest.get("language", "")
    delimiters = tuple(manifest.get("delimiters", DEFAULT_DELIMITERS))
    parts = {
        name: read_examples_file(prepared_dir / f"{name}.tsv", language=language, delimiters=delimiters)
        for name in ("train", "dev", "test")
    }
    split = DataSplit(parts["train"], parts["dev"], parts["test"], seed=manifest.get("seed", 0))
    return split, manifest


def subsample_train(split: DataSplit, fraction: float) -> list[WordExample]:
    """A nested train prefix: smaller fractions are subsets of larger ones.

    Reuses the split seed so learning-curve points differ only by size.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return list(split.train)
    order = list(range(len(split.train)))
    random.Random(split.seed).shuffle(order)
    n = max(1, int(len(split.train) * fraction))
    keep = sorted(order[:n])
    return [split.train[i] for i in keep]
