"""Experiment orchestration: single runs, loss-weight sweeps, learning
curves, synthetic saturation grids, and report rendering.

Results accumulate in an append-only JSONL ledger guarded by file
locking, so independent specs can run in parallel processes. Re-running
a spec that already has a completed row is a no-op unless forced.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import SegglossError
from .igt import DataSplit, load_split, subsample_train
from .model import ModelConfig
from .synth import accepted_examples, load_cache, mix
from .training import MULTITASK, SINGLE_TASK, TrainConfig, evaluate_on, train

TRAIN_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
SYNTH_RATIOS = (0.0, 0.25, 0.5, 0.75)
LEDGER_NAME = "results.jsonl"


@dataclass(frozen=True)
class ExperimentSpec:
    language: str
    mode: str = MULTITASK
    seg_loss_weight: float = 0.9
    train_fraction: float = 1.0
    synth_ratio: float = 0.0
    seed: int = 0
    max_epochs: int = 150
    beam_width: int = 5
    batch_size: int = 400
    learning_rate: float = 0.001
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if not self.language:
            raise ValueError("language is required")
        if self.mode not in (MULTITASK, SINGLE_TASK):
            raise ValueError(f"mode must be '{MULTITASK}' or '{SINGLE_TASK}'")
        if self.mode == SINGLE_TASK:
            object.__setattr__(self, "seg_loss_weight", 1.0)
        if not 0.0 <= self.seg_loss_weight <= 1.0:
            raise ValueError("seg_loss_weight must be in [0, 1]")
        if self.train_fraction not in TRAIN_FRACTIONS:
            raise ValueError(f"train_fraction must be one of {TRAIN_FRACTIONS}")
        if self.synth_ratio not in SYNTH_RATIOS:
            raise ValueError(f"synth_ratio must be one of {SYNTH_RATIOS}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["model"] = asdict(self.model)
        return data

    def key(self) -> str:
        """Stable identity for ledger lookups; covers every field that can
        change the outcome."""
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

    def describe(self) -> str:
        return (
            f"{self.language}/{self.mode} weight={self.seg_loss_weight} "
            f"fraction={self.train_fraction} synth={self.synth_ratio} seed={self.seed}"
        )


@dataclass
class ResultRow:
    spec: dict
    key: str
    status: str = "ok"
    word_accuracy: float | None = None
    morpheme_f1: float | None = None
    morpheme_precision: float | None = None
    morpheme_recall: float | None = None
    edit_distance_sum: int | None = None
    seconds: float | None = None
    checkpoint_path: str | None = None
    best_epoch: int | None = None
    dev_word_accuracy: float | None = None
    n_train: int | None = None
    n_synthetic: int | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRow":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


def append_row(ledger_path, row: ResultRow) -> None:
    path = Path(ledger_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(row.to_dict(), ensure_ascii=False) + "\n"
    with open(path, "a", encoding="utf-8") as fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
        try:
            fh.write(line)
            fh.flush()
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


def read_ledger(ledger_path) -> list[ResultRow]:
    path = Path(ledger_path)
    if not path.exists():
        return []
    rows = []
    with open(path, encoding="utf-8") as fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_SH)
        try:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(ResultRow.from_dict(json.loads(line)))
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
    return rows


def find_completed(ledger_path, key: str) -> ResultRow | None:
    for row in read_ledger(ledger_path):
        if row.key == key and row.status == "ok":
            return row
    return None


def _load_language_split(data_dir, language: str) -> DataSplit:
    split, _ = load_split(Path(data_dir) / language)
    return split


def run(
    spec: ExperimentSpec,
    data_dir,
    results_dir,
    synth_cache=None,
    force: bool = False,
    quiet: bool = True,
) -> ResultRow:
    """Execute one experiment end to end and append its row to the
    ledger. A completed identical spec short-circuits unless `force`."""
    results_dir = Path(results_dir)
    ledger = results_dir / LEDGER_NAME
    if not force:
        done = find_completed(ledger, spec.key())
        if done is not None:
            return done

    started = time.perf_counter()
    try:
        split = _load_language_split(data_dir, spec.language)
        train_set = subsample_train(split, spec.train_fraction)
        n_synth = 0
        if spec.synth_ratio > 0:
            if synth_cache is None:
                raise SegglossError("synth_ratio > 0 requires a synthetic cache")
            pool = accepted_examples(load_cache(synth_cache))
            before = len(train_set)
            train_set = mix(train_set, pool, spec.synth_ratio, seed=spec.seed)
            n_synth = len(train_set) - before
        config = TrainConfig(
            seg_loss_weight=spec.seg_loss_weight,
            learning_rate=spec.learning_rate,
            batch_size=spec.batch_size,
            max_epochs=spec.max_epochs,
            beam_width_for_dev=spec.beam_width,
            seed=spec.seed,
            mode=spec.mode,
        )
        checkpoint = results_dir / "checkpoints" / f"{spec.key()}.pt"
        log_path = results_dir / "logs" / f"{spec.key()}.jsonl"
        outcome = train(
            train_set,
            split.dev,
            spec.model,
            config,
            log_path=log_path,
            checkpoint_path=checkpoint,
            quiet=quiet,
        )
        report, _ = evaluate_on(outcome, None, split.test, beam_width=spec.beam_width)
        row = ResultRow(
            spec=spec.to_dict(),
            key=spec.key(),
            status="ok",
            word_accuracy=report.word_accuracy,
            morpheme_f1=report.morpheme_f1,
            morpheme_precision=report.morpheme_precision,
            morpheme_recall=report.morpheme_recall,
            edit_distance_sum=report.edit_distance_sum,
            seconds=time.perf_counter() - started,
            checkpoint_path=str(checkpoint),
            best_epoch=outcome.best_epoch,
            dev_word_accuracy=outcome.best_dev_accuracy,
            n_train=len(train_set),
            n_synthetic=n_synth,
        )
        append_row(ledger, row)
        return row
    except Exception as exc:
        failed = ResultRow(
            spec=spec.to_dict(),
            key=spec.key(),
            status="failed",
            seconds=time.perf_counter() - started,
            error=str(exc),
        )
        append_row(ledger, failed)
        raise SegglossError(f"experiment {spec.describe()} failed: {exc}") from exc


def learning_curve(
    language: str,
    data_dir,
    results_dir,
    fractions: Sequence[float] = TRAIN_FRACTIONS,
    modes: Sequence[str] = (MULTITASK, SINGLE_TASK),
    force: bool = False,
    **spec_kwargs,
) -> list[ResultRow]:
    """Cross product of fraction x mode; emits a plot-data CSV with
    exactly the rows of the returned table."""
    bad = [f for f in fractions if f not in TRAIN_FRACTIONS]
    if bad:
        raise ValueError(f"fractions {bad} outside {TRAIN_FRACTIONS}")
    if not fractions:
        raise ValueError("at least one fraction is required")
    rows = []
    for mode in modes:
        for fraction in sorted(fractions):
            spec = ExperimentSpec(
                language=language, mode=mode, train_fraction=fraction, **spec_kwargs
            )
            rows.append(run(spec, data_dir, results_dir, force=force))
    write_curve_csv(Path(results_dir) / f"learning_curve_{language}.csv", rows)
    return rows


def write_curve_csv(path, rows: Sequence[ResultRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("language,mode,train_fraction,word_accuracy,morpheme_f1,edit_distance_sum\n")
        for row in rows:
            spec = row.spec
            fh.write(
                f"{spec['language']},{spec['mode']},{spec['train_fraction']},"
                f"{row.word_accuracy},{row.morpheme_f1},{row.edit_distance_sum}\n"
            )


def saturation_grid(
    languages: Sequence[str] | str,
    data_dir,
    results_dir,
    synth_caches: dict | None = None,
    ratios: Sequence[float] = (0.0, 0.25, 0.5, 0.75),
    modes: Sequence[str] = (MULTITASK, SINGLE_TASK),
    force: bool = False,
    **spec_kwargs,
) -> list[dict]:
    """Rows for every (language, mode, ratio); when several languages are
    given, an 'ave' row per (mode, ratio) holds the arithmetic means."""
    if isinstance(languages, str):
        languages = [languages]
    bad = [r for r in ratios if r not in SYNTH_RATIOS]
    if bad:
        raise ValueError(f"ratios {bad} outside {SYNTH_RATIOS}")
    synth_caches = synth_caches or {}
    table: list[dict] = []
    for mode in modes:
        for ratio in sorted(ratios):
            per_language: list[ResultRow] = []
            for language in languages:
                cache = synth_caches.get(language)
                if ratio > 0 and cache is None:
                    raise SegglossError(f"no synthetic cache configured for {language}")
                spec = ExperimentSpec(
                    language=language, mode=mode, synth_ratio=ratio, **spec_kwargs
                )
                row = run(spec, data_dir, results_dir, synth_cache=cache, force=force)
                per_language.append(row)
                table.append(
                    {
                        "language": language,
                        "mode": mode,
                        "synth_ratio": ratio,
                        "word_accuracy": row.word_accuracy,
                        "morpheme_f1": row.morpheme_f1,
                        "edit_distance_sum": row.edit_distance_sum,
                    }
                )
            if len(languages) > 1:
                table.append(
                    {
                        "language": "ave",
                        "mode": mode,
                        "synth_ratio": ratio,
                        "word_accuracy": _mean([r.word_accuracy for r in per_language]),
                        "morpheme_f1": _mean([r.morpheme_f1 for r in per_language]),
                        "edit_distance_sum": _mean([r.edit_distance_sum for r in per_language]),
                    }
                )
    write_grid_csv(Path(results_dir) / "saturation_grid.csv", table)
    return table


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def write_grid_csv(path, table: Sequence[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("language,mode,synth_ratio,word_accuracy,morpheme_f1,edit_distance_sum\n")
        for row in table:
            fh.write(
                f"{row['language']},{row['mode']},{row['synth_ratio']},"
                f"{row['word_accuracy']},{row['morpheme_f1']},{row['edit_distance_sum']}\n"
            )


# Reference metric targets (test-set ACC / F1 / summed edit distance) used
# by the report for side-by-side comparison and by desk-scale checks.
REFERENCE_RESULTS = {
    ("lez", MULTITASK): {"word_accuracy": 48.54, "morpheme_f1": 68.84, "edit_distance_sum": 519},
    ("lez", SINGLE_TASK): {"word_accuracy": 44.66, "morpheme_f1": 60.75, "edit_distance_sum": 568},
    ("git", MULTITASK): {"word_accuracy": 52.29, "morpheme_f1": 71.64, "edit_distance_sum": 112},
    ("git", SINGLE_TASK): {"word_accuracy": 47.71, "morpheme_f1": 65.50, "edit_distance_sum": 117},
}

REFERENCE_SYNTH_RESULTS = {
    ("git", MULTITASK, 0.75): {"word_accuracy": 56.88, "morpheme_f1": 74.32, "edit_distance_sum": 96},
}


def report(results_dir, out_path=None) -> str:
    """Human-readable summary of the ledger: one block per language with
    ACC / F1 / ED sub-rows per system, plus reference targets when known."""
    rows = [r for r in read_ledger(Path(results_dir) / LEDGER_NAME) if r.status == "ok"]
    if not rows:
        raise SegglossError("the results ledger has no completed runs")

    def system_name(spec: dict) -> str:
        base = "M" if spec["mode"] == MULTITASK else "S"
        if spec.get("synth_ratio"):
            base += f"+synth({spec['synth_ratio']})"
        if spec.get("train_fraction", 1.0) != 1.0:
            base += f"@{spec['train_fraction']}"
        return base

    # last completed row wins for each (language, system) cell
    cells: dict[tuple[str, str], ResultRow] = {}
    for row in rows:
        cells[(row.spec["language"], system_name(row.spec))] = row
    languages = sorted({lang for lang, _ in cells})
    systems = sorted({system for _, system in cells})

    lines = []
    header = ["system", "metric"] + languages
    widths = [max(14, len(h)) for h in header]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for system in systems:
        for metric, attr in (
            ("ACC", "word_accuracy"),
            ("F1", "morpheme_f1"),
            ("ED", "edit_distance_sum"),
        ):
            values = []
            for language in languages:
                row = cells.get((language, system))
                value = getattr(row, attr) if row is not None else None
                values.append("-" if value is None else f"{value:.2f}" if isinstance(value, float) else str(value))
            fields = [system if metric == "ACC" else "", metric] + values
            lines.append("  ".join(f.ljust(w) for f, w in zip(fields, widths)))
        lines.append("")

    reference_lines = []
    for (language, mode), targets in sorted(REFERENCE_RESULTS.items()):
        if language in languages:
            reference_lines.append(
                f"  reference {language}/{'M' if mode == MULTITASK else 'S'}: "
                f"ACC {targets['word_accuracy']}, F1 {targets['morpheme_f1']}, ED {targets['edit_distance_sum']}"
            )
    if reference_lines:
        lines.append("Reference targets:")
        lines.extend(reference_lines)
        lines.append("")

    text = "\n".join(lines)
    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text, encoding="utf-8")
    return text
