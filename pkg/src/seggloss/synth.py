"""Synthetic example generation through an instruction-following LLM.

Pipeline: mine stems and their meanings from the training set (preferring
words whose surface diverges from the concatenated canonical morphemes),
extract the grammatical morpheme inventory, render one prompt per stem,
parse the model's replies into (word, segmentation, gloss) triples, and
validate each triple before it may be mixed into training data.

Every parsed candidate is recorded with a status; rejected ones keep the
raw response text so the unfiltered condition can be replayed later.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .errors import FixtureMissingError, GenerationError, InsufficientSyntheticError, SegglossError
from .igt import DEFAULT_DELIMITERS, WordExample, nfc, word_example
from .vocab import is_grammatical_label, tokenize_gloss_string

API_KEY_ENV = "SEGGLOSS_API_KEY"


# ---------------------------------------------------------------------------
# mining


def find_alternating_words(train: Sequence[WordExample]) -> list[WordExample]:
    """Words whose canonical morphemes do not concatenate back to the
    surface form; these showcase the character changes the generator is
    asked to imitate."""
    return [ex for ex in train if ex.alternating]


@dataclass
class StemRecord:
    stem: str
    meaning: str
    examples: list[WordExample] = field(default_factory=list)

    def __post_init__(self):
        if not self.examples:
            raise SegglossError("a stem record needs at least one example")


def _stem_of(ex: WordExample) -> tuple[str, str] | None:
    """(stem, meaning): the canonical morpheme aligned with the first
    lexical (non-grammatical) gloss label. None when the example has no
    clean alignment or no lexical label."""
    if ex.alignment_warning or len(ex.canonical_morphemes) != len(ex.gloss_morphemes):
        return None
    for morpheme, label in zip(ex.canonical_morphemes, ex.gloss_morphemes):
        if not is_grammatical_label(label):
            return (morpheme, label)
    return None


def collect_stem_records(
    train: Sequence[WordExample],
    max_stems: int | None = None,
    examples_per_stem: int = 5,
) -> list[StemRecord]:
    """One record per (stem, meaning) pair, most productive stems first.
    Alternating examples are listed before transparent ones inside each
    record, since they demonstrate the interesting behaviour."""
    if not train:
        raise SegglossError("cannot mine stems from an empty training set")
    groups: dict[tuple[str, str], list[WordExample]] = {}
    for ex in train:
        pair = _stem_of(ex)
        if pair is not None:
            groups.setdefault(pair, []).append(ex)
    records = []
    for (stem, meaning), examples in groups.items():
        examples = sorted(examples, key=lambda e: (not e.alternating, e.surface))
        records.append(StemRecord(stem, meaning, examples[:examples_per_stem]))
    records.sort(key=lambda r: (-len(groups[(r.stem, r.meaning)]), r.stem, r.meaning))
    if max_stems is not None:
        records = records[:max_stems]
    return records


@dataclass
class MorphemeInventory:
    """Grammatical gloss label -> most common morpheme form in train."""

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for label, form in self.entries.items():
            if is_grammatical_label(label) is False:
                raise SegglossError(f"inventory label {label!r} is not grammatical")
            if not form:
                raise SegglossError(f"inventory label {label!r} has an empty form")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, label: str) -> bool:
        return label in self.entries


def collect_inventory(train: Sequence[WordExample]) -> MorphemeInventory:
    counts: dict[str, dict[str, int]] = {}
    for ex in train:
        if ex.alignment_warning or len(ex.canonical_morphemes) != len(ex.gloss_morphemes):
            continue
        for morpheme, label in zip(ex.canonical_morphemes, ex.gloss_morphemes):
            if is_grammatical_label(label) and morpheme:
                forms = counts.setdefault(label, {})
                forms[morpheme] = forms.get(morpheme, 0) + 1
    entries = {}
    for label in sorted(counts):
        forms = counts[label]
        entries[label] = max(sorted(forms), key=lambda f: forms[f])
    return MorphemeInventory(entries)


# ---------------------------------------------------------------------------
# prompting


def build_prompt(
    stem: StemRecord,
    inventory: MorphemeInventory,
    n_words: int = 3,
    n_morphemes: tuple[int, int] = (2, 5),
    language: str = "this language",
) -> str:
    if n_words <= 0:
        raise GenerationError("n_words must be positive")
    if len(inventory) == 0:
        raise GenerationError("cannot prompt with an empty morpheme inventory")
    lo, hi = n_morphemes
    lines = [
        f"You are a linguistics expert of {language}. "
        "Your job is to generate new words based on the examples you learned. "
        f'You are given this stem "{stem.stem}", its meaning is "{stem.meaning}". '
        "Here are several word examples of this stems:",
        "",
    ]
    for i, ex in enumerate(stem.examples, start=1):
        lines.append(f"Example {i}:")
        lines.append("")
        lines.append(
            f"surface form: {ex.surface}, canonical segmentation: {ex.segmentation}, gloss: {ex.gloss}"
        )
        lines.append("")
    lines.append("You are also given a list of grammatical morphemes and their corresponding gloss:")
    lines.append("")
    for label, form in inventory.entries.items():
        lines.append(f'Grammatical gloss "{label}", its morpheme is "{form}"')
        lines.append("")
    lines.append(
        f"Can you generate {n_words} new words using the stem and randomly use {lo}-{hi} "
        "grammatical morphemes. You need to return the result in the same format as the "
        "examples (word, canonical segmentation, and gloss). Please note that canonical "
        "segmentation will have character change."
    )
    return "\n".join(lines)


_TRIPLE_RE = re.compile(
    r"(?:word|surface form)\s*[:=]\s*(?P<surface>\S+?)\s*[,;]\s*"
    r"canonical segmentation\s*[:=]\s*(?P<seg>\S+?)\s*[,;]\s*"
    r"gloss\s*[:=]\s*(?P<gloss>\S+)",
    re.IGNORECASE,
)


def parse_response(text: str) -> list[tuple[str, str, str]]:
    """Extract (surface, segmentation, gloss) triples from a reply in the
    requested format; tolerant of numbering, bullets, and markdown."""
    triples = []
    for match in _TRIPLE_RE.finditer(text):
        surface = match.group("surface").strip("*`'\"")
        seg = match.group("seg").strip("*`'\"")
        gloss = match.group("gloss").strip("*`'\".")
        if surface and seg and gloss:
            triples.append((nfc(surface), nfc(seg), nfc(gloss)))
    return triples


# ---------------------------------------------------------------------------
# validation

ACCEPTED = "accepted"


@dataclass
class SyntheticExample:
    surface: str
    segmentation: str
    gloss: str
    stem: str
    status: str
    raw_response: str = ""

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED

    def key(self) -> tuple[str, str, str]:
        return (self.surface, self.segmentation, self.gloss)

    def to_word_example(self, delimiters=DEFAULT_DELIMITERS) -> WordExample:
        return word_example(
            self.surface, self.segmentation, self.gloss, delimiters=delimiters, synthetic=True
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticExample":
        return cls(**{k: data[k] for k in ("surface", "segmentation", "gloss", "stem", "status", "raw_response")})


def validate_candidate(
    surface: str,
    segmentation: str,
    gloss: str,
    stem: StemRecord,
    inventory: MorphemeInventory,
    known_keys: set[tuple[str, str, str]],
    delimiters=DEFAULT_DELIMITERS,
) -> str:
    """Status for one parsed triple: 'accepted' or 'rejected(<reason>)'.

    Checks, in order: morpheme/label count alignment, grammatical labels
    all present in the inventory, the requested stem aligned with its
    meaning, and novelty against the gold training triples."""
    try:
        ex = word_example(surface, segmentation, gloss, delimiters=delimiters, synthetic=True)
    except SegglossError:
        return "rejected(malformed)"
    if ex.alignment_warning or not ex.canonical_morphemes:
        return "rejected(alignment)"
    for label in ex.gloss_morphemes:
        if is_grammatical_label(label) and label not in inventory:
            return "rejected(inventory)"
    stem_ok = any(
        label == stem.meaning and stem.stem in morpheme
        for morpheme, label in zip(ex.canonical_morphemes, ex.gloss_morphemes)
    )
    if not stem_ok:
        return "rejected(stem)"
    if ex.key in known_keys:
        return "rejected(duplicate)"
    return ACCEPTED


# ---------------------------------------------------------------------------
# clients


class CompletionClient(Protocol):
    concurrency: int

    def complete(self, prompt: str) -> str: ...

    def complete_many(self, prompts: Sequence[str]) -> list[str]: ...


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


class FixtureClient:
    """Offline client: responses are files named by a hash of the prompt.
    Generation through fixtures is a pure function of the fixture set."""

    concurrency = 1

    def __init__(self, directory):
        self.directory = Path(directory)

    def path_for(self, prompt: str) -> Path:
        return self.directory / f"{prompt_key(prompt)}.txt"

    def complete(self, prompt: str) -> str:
        path = self.path_for(prompt)
        if not path.exists():
            raise FixtureMissingError(f"no fixture response for prompt hash {prompt_key(prompt)}")
        return path.read_text(encoding="utf-8")

    def complete_many(self, prompts: Sequence[str]) -> list[str]:
        return [self.complete(p) for p in prompts]


class LiveClient:
    """Chat-completions HTTP client with bounded retries, exponential
    backoff, a global request-rate limiter, and a small thread pool;
    results always come back in prompt order."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        temperature: float = 0.7,
        max_retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 60.0,
        concurrency: int = 4,
        min_interval: float = 0.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise GenerationError(f"no API key: pass one or set {API_KEY_ENV}")
        self.temperature = temperature
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.concurrency = max(1, concurrency)
        self.min_interval = min_interval
        self._gate = threading.Lock()
        self._last_request = 0.0

    def _throttle(self):
        if self.min_interval <= 0:
            return
        with self._gate:
            wait = self._last_request + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def complete(self, prompt: str) -> str:
        import requests

        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            self._throttle()
            try:
                response = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
                if response.status_code >= 500 or response.status_code == 429:
                    last_error = GenerationError(f"server returned {response.status_code}")
                    continue
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except GenerationError:
                raise
            except Exception as exc:  # transport errors are retried
                last_error = exc
        raise GenerationError(f"request failed after {self.max_retries + 1} attempts: {last_error}")

    def complete_many(self, prompts: Sequence[str]) -> list[str]:
        if len(prompts) <= 1 or self.concurrency == 1:
            return [self.complete(p) for p in prompts]
        with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
            return list(pool.map(self.complete, prompts))


# ---------------------------------------------------------------------------
# generation and mixing


@dataclass
class PromptJob:
    stem: StemRecord
    prompt: str


def plan_prompts(
    train: Sequence[WordExample],
    n_words: int = 3,
    n_morphemes: tuple[int, int] = (2, 5),
    language: str = "this language",
    max_stems: int | None = None,
    examples_per_stem: int = 5,
) -> tuple[list[PromptJob], MorphemeInventory]:
    records = collect_stem_records(train, max_stems=max_stems, examples_per_stem=examples_per_stem)
    inventory = collect_inventory(train)
    jobs = [
        PromptJob(stem=r, prompt=build_prompt(r, inventory, n_words, n_morphemes, language)) for r in records
    ]
    return jobs, inventory


def load_cache(path) -> list[SyntheticExample]:
    path = Path(path)
    if not path.exists():
        return []
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(SyntheticExample.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise SegglossError(f"{path}:{line_no}: bad cache record: {exc}") from exc
    return records


def append_cache(path, records: Iterable[SyntheticExample]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def generate(
    client: CompletionClient,
    jobs: Sequence[PromptJob],
    inventory: MorphemeInventory,
    train: Sequence[WordExample],
    budget: int,
    cache_path=None,
) -> list[SyntheticExample]:
    """Run prompts until `budget` triples are accepted or the jobs run
    out. Returns every record produced (accepted and rejected). A cache
    file is consulted first: its accepted rows count toward the budget
    and stems already answered are not re-asked."""
    if budget <= 0:
        raise GenerationError("generation budget must be positive")
    known_keys = {ex.key for ex in train}
    records: list[SyntheticExample] = []
    asked_stems: set[str] = set()
    if cache_path is not None:
        records = load_cache(cache_path)
        asked_stems = {r.stem for r in records}
        for r in records:
            if r.accepted:
                known_keys.add((r.surface, r.segmentation, r.gloss))
    accepted = sum(1 for r in records if r.accepted)

    pending = [job for job in jobs if job.stem.stem not in asked_stems]
    chunk = max(1, getattr(client, "concurrency", 1))
    position = 0
    while position < len(pending) and accepted < budget:
        batch = pending[position : position + chunk]
        position += chunk
        responses = client.complete_many([job.prompt for job in batch])
        new_records: list[SyntheticExample] = []
        for job, response in zip(batch, responses):
            triples = parse_response(response)
            if not triples:
                new_records.append(
                    SyntheticExample("", "", "", job.stem.stem, "rejected(unparseable)", response)
                )
                continue
            for surface, seg, gloss in triples:
                status = validate_candidate(surface, seg, gloss, job.stem, inventory, known_keys)
                if status == ACCEPTED and accepted >= budget:
                    status = "rejected(budget)"
                record = SyntheticExample(surface, seg, gloss, job.stem.stem, status, response)
                if record.accepted:
                    accepted += 1
                    known_keys.add(record.key())
                new_records.append(record)
        if cache_path is not None:
            append_cache(cache_path, new_records)
        records.extend(new_records)
    return records


def accepted_examples(records: Sequence[SyntheticExample], delimiters=DEFAULT_DELIMITERS) -> list[WordExample]:
    return [r.to_word_example(delimiters) for r in records if r.accepted]


def mix(
    train: Sequence[WordExample],
    synthetic: Sequence[WordExample],
    ratio: float,
    seed: int = 0,
) -> list[WordExample]:
    """Gold examples plus floor(ratio * |gold|) synthetic ones drawn with
    a fixed seed; the gold list is returned unchanged at the front."""
    if ratio < 0:
        raise ValueError("ratio must be non-negative")
    needed = math.floor(ratio * len(train))
    if needed == 0:
        return list(train)
    if len(synthetic) < needed:
        raise InsufficientSyntheticError(
            f"need {needed} synthetic examples but only {len(synthetic)} are available"
        )
    picked = random.Random(seed).sample(list(synthetic), needed)
    return list(train) + picked
