"""Joint training loop for the shared-encoder model.

The objective is a weighted sum of per-stream token-mean cross entropies:

    total = weight * seg_loss + (1 - weight) * gloss_loss

Single-task mode drops the gloss decoder entirely and pins the weight to
1. Checkpoint selection is by segmentation word accuracy on the dev set,
decoded with a beam each epoch.
"""

from __future__ import annotations

import copy
import json
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import torch
import torch.nn.functional as F

from .decoding import decode_corpus
from .errors import SegglossError, TrainingDivergedError
from .metrics import evaluate_pairs, word_accuracy
from .model import ModelConfig, SegGlossModel, save_checkpoint
from .vocab import PAD, EncodedExample, Vocabularies, build_vocabularies, encode_example

MULTITASK = "multitask"
SINGLE_TASK = "single_task"


@dataclass
class TrainConfig:
    seg_loss_weight: float = 0.9
    learning_rate: float = 0.001
    batch_size: int = 400
    batch_unit: str = "tokens"  # or "sequences"
    max_epochs: int = 150
    beam_width_for_dev: int = 5
    seed: int = 0
    mode: str = MULTITASK

    def __post_init__(self):
        if not 0.0 <= self.seg_loss_weight <= 1.0:
            raise ValueError("seg_loss_weight must be in [0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if self.batch_unit not in ("tokens", "sequences"):
            raise ValueError("batch_unit must be 'tokens' or 'sequences'")
        if self.max_epochs <= 0:
            raise ValueError("max_epochs must be positive")
        if self.beam_width_for_dev <= 0:
            raise ValueError("beam_width_for_dev must be positive")
        if self.mode not in (MULTITASK, SINGLE_TASK):
            raise ValueError(f"mode must be '{MULTITASK}' or '{SINGLE_TASK}'")
        if self.mode == SINGLE_TASK:
            # the gloss term does not exist in this variant
            self.seg_loss_weight = 1.0

    @property
    def multitask(self) -> bool:
        return self.mode == MULTITASK


class JointLoss(NamedTuple):
    total: torch.Tensor
    seg: torch.Tensor
    gloss: torch.Tensor | None


def joint_loss(
    seg_log_probs: torch.Tensor,
    seg_targets: torch.Tensor,
    weight: float,
    gloss_log_probs: torch.Tensor | None = None,
    gloss_targets: torch.Tensor | None = None,
) -> JointLoss:
    """Weighted sum of token-mean cross entropies; PAD positions are
    excluded from both means. The gloss term is always formed as
    (1 - weight) * loss, so at weight 1 the gloss gradients are exactly
    zero rather than merely unused."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must be in [0, 1]")
    if (gloss_log_probs is None) != (gloss_targets is None):
        raise SegglossError("gloss log-probs and targets must be given together")

    def stream_loss(log_probs, targets):
        if log_probs.shape[:2] != targets.shape:
            raise SegglossError("log-prob and target shapes disagree")
        return F.nll_loss(log_probs.reshape(-1, log_probs.shape[-1]), targets.reshape(-1), ignore_index=PAD)

    seg = stream_loss(seg_log_probs, seg_targets)
    if gloss_log_probs is None:
        return JointLoss(total=weight * seg, seg=seg, gloss=None)
    gloss = stream_loss(gloss_log_probs, gloss_targets)
    return JointLoss(total=weight * seg + (1.0 - weight) * gloss, seg=seg, gloss=gloss)


def make_batches(
    examples: Sequence[EncodedExample],
    batch_size: int,
    batch_unit: str,
    rng: random.Random,
) -> list[list[EncodedExample]]:
    """Shuffle, then fill batches greedily. With unit 'tokens' the budget
    counts decoder target positions; a single oversized example still
    forms its own batch."""
    order = list(range(len(examples)))
    rng.shuffle(order)
    batches: list[list[EncodedExample]] = []
    current: list[EncodedExample] = []
    current_cost = 0
    for idx in order:
        ex = examples[idx]
        cost = ex.target_tokens if batch_unit == "tokens" else 1
        if current and current_cost + cost > batch_size:
            batches.append(current)
            current, current_cost = [], 0
        current.append(ex)
        current_cost += cost
    if current:
        batches.append(current)
    return batches


def _pad_rows(rows: list[tuple[int, ...]]) -> torch.Tensor:
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), PAD, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    return out


class Batch(NamedTuple):
    src: torch.Tensor
    src_mask: torch.Tensor
    seg_in: torch.Tensor
    seg_out: torch.Tensor
    gloss_in: torch.Tensor
    gloss_out: torch.Tensor
    seg_tokens: int
    gloss_tokens: int


def collate(batch: Sequence[EncodedExample]) -> Batch:
    src = _pad_rows([ex.source for ex in batch])
    seg = _pad_rows([ex.seg_target for ex in batch])
    gloss = _pad_rows([ex.gloss_target for ex in batch])
    return Batch(
        src=src,
        src_mask=src != PAD,
        seg_in=seg[:, :-1],
        seg_out=seg[:, 1:],
        gloss_in=gloss[:, :-1],
        gloss_out=gloss[:, 1:],
        seg_tokens=int((seg[:, 1:] != PAD).sum()),
        gloss_tokens=int((gloss[:, 1:] != PAD).sum()),
    )


@dataclass
class EpochStats:
    epoch: int
    total_loss: float
    seg_loss: float
    gloss_loss: float | None
    dev_word_accuracy: float | None
    seconds: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TrainResult:
    model: SegGlossModel
    vocabs: Vocabularies
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_accuracy: float | None = None
    config: TrainConfig | None = None


def train(
    train_examples: Sequence,
    dev_examples: Sequence,
    model_config: ModelConfig,
    train_config: TrainConfig,
    log_path=None,
    checkpoint_path=None,
    quiet: bool = True,
) -> TrainResult:
    """Train from scratch and return the best-dev-accuracy model. With an
    empty dev set the final epoch is kept instead. Fixed seed implies a
    bit-identical run: parameter init, batch order, and dropout all
    derive from `train_config.seed`."""
    if not train_examples:
        raise SegglossError("cannot train on an empty training set")
    torch.manual_seed(train_config.seed)
    rng = random.Random(train_config.seed)

    vocabs = build_vocabularies(list(train_examples))
    encoded = [encode_example(ex, vocabs) for ex in train_examples]
    model = SegGlossModel(
        model_config,
        source_vocab_size=len(vocabs.source),
        segmentation_vocab_size=len(vocabs.segmentation),
        gloss_vocab_size=len(vocabs.gloss) if train_config.multitask else None,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=train_config.learning_rate)

    dev_surfaces = [ex.surface for ex in dev_examples]
    dev_segmentations = [ex.segmentation for ex in dev_examples]

    result = TrainResult(model=model, vocabs=vocabs, config=train_config)
    best_state = None
    best_accuracy = float("-inf")
    log_fh = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_fh = open(log_path, "w", encoding="utf-8")
    try:
        for epoch in range(1, train_config.max_epochs + 1):
            started = time.perf_counter()
            model.train()
            seg_sum = gloss_sum = total_sum = 0.0
            seg_count = gloss_count = 0
            for batch_examples in make_batches(encoded, train_config.batch_size, train_config.batch_unit, rng):
                batch = collate(batch_examples)
                optimizer.zero_grad()
                states = model.encode(batch.src, batch.src_mask)
                seg_lp = model.decode("segmentation", states, batch.src_mask, batch.seg_in)
                if train_config.multitask:
                    gloss_lp = model.decode("gloss", states, batch.src_mask, batch.gloss_in)
                    loss = joint_loss(
                        seg_lp, batch.seg_out, train_config.seg_loss_weight, gloss_lp, batch.gloss_out
                    )
                else:
                    loss = joint_loss(seg_lp, batch.seg_out, train_config.seg_loss_weight)
                if not torch.isfinite(loss.total):
                    raise TrainingDivergedError(epoch)
                loss.total.backward()
                optimizer.step()
                seg_sum += loss.seg.item() * batch.seg_tokens
                seg_count += batch.seg_tokens
                total_sum += loss.total.item() * batch.seg_tokens
                if loss.gloss is not None:
                    gloss_sum += loss.gloss.item() * batch.gloss_tokens
                    gloss_count += batch.gloss_tokens

            dev_accuracy = None
            if dev_surfaces:
                predictions = decode_corpus(
                    model, vocabs, dev_surfaces, beam_width=train_config.beam_width_for_dev
                )
                dev_accuracy = word_accuracy(
                    list(zip(dev_segmentations, (p.segmentation for p in predictions)))
                )
            stats = EpochStats(
                epoch=epoch,
                total_loss=total_sum / max(seg_count, 1),
                seg_loss=seg_sum / max(seg_count, 1),
                gloss_loss=(gloss_sum / gloss_count) if gloss_count else None,
                dev_word_accuracy=dev_accuracy,
                seconds=time.perf_counter() - started,
            )
            result.history.append(stats)
            if log_fh is not None:
                log_fh.write(json.dumps(stats.to_dict()) + "\n")
                log_fh.flush()
            if not quiet:
                print(
                    f"epoch {epoch}: loss {stats.total_loss:.4f}"
                    + (f" dev acc {dev_accuracy:.2f}" if dev_accuracy is not None else "")
                )
            # strict improvement keeps the earliest epoch on ties
            score = dev_accuracy if dev_accuracy is not None else float(epoch)
            if score > best_accuracy:
                best_accuracy = score
                best_state = copy.deepcopy(model.state_dict())
                result.best_epoch = epoch
                result.best_dev_accuracy = dev_accuracy
    finally:
        if log_fh is not None:
            log_fh.close()

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    if checkpoint_path is not None:
        save_checkpoint(
            checkpoint_path,
            model,
            vocabs,
            meta={
                "epoch": result.best_epoch,
                "dev_word_accuracy": result.best_dev_accuracy,
                "seed": train_config.seed,
                "mode": train_config.mode,
                "seg_loss_weight": train_config.seg_loss_weight,
                "epochs_run": train_config.max_epochs,
            },
        )
    return result


def evaluate_on(
    result_or_model,
    vocabs: Vocabularies | None,
    examples: Sequence,
    beam_width: int = 5,
):
    """Decode a held-out set and score the segmentation stream; returns
    (EvalReport, predictions)."""
    if isinstance(result_or_model, TrainResult):
        model, vocabs = result_or_model.model, result_or_model.vocabs
    else:
        model = result_or_model
        if vocabs is None:
            raise SegglossError("vocabs are required when passing a bare model")
    predictions = decode_corpus(model, vocabs, [ex.surface for ex in examples], beam_width=beam_width)
    pairs = [(ex.segmentation, p.segmentation) for ex, p in zip(examples, predictions)]
    return evaluate_pairs(pairs), predictions


def sweep_lambda(
    train_examples: Sequence,
    dev_examples: Sequence,
    test_examples: Sequence,
    model_config: ModelConfig,
    base_config: TrainConfig,
    weights: Sequence[float],
    include_single_task: bool = False,
) -> list[dict]:
    """Full train/evaluate cycle per loss weight; one result row each."""
    if not weights:
        raise ValueError("sweep requires at least one loss weight")
    rows = []
    configs = [replace(base_config, seg_loss_weight=w, mode=MULTITASK) for w in weights]
    if include_single_task:
        configs.append(replace(base_config, seg_loss_weight=1.0, mode=SINGLE_TASK))
    for config in configs:
        outcome = train(train_examples, dev_examples, model_config, config)
        report, _ = evaluate_on(outcome, None, test_examples, beam_width=config.beam_width_for_dev)
        rows.append(
            {
                "seg_loss_weight": config.seg_loss_weight,
                "mode": config.mode,
                "word_accuracy": report.word_accuracy,
                "morpheme_f1": report.morpheme_f1,
                "edit_distance_sum": report.edit_distance_sum,
                "best_epoch": outcome.best_epoch,
                "dev_word_accuracy": outcome.best_dev_accuracy,
            }
        )
    return rows
