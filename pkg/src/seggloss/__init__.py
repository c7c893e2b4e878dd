"""Multitask canonical morpheme segmentation and glossing toolkit."""

from .decoding import Hypothesis, Prediction, beam_search, decode_corpus
from .errors import SegglossError
from .harness import ExperimentSpec, ResultRow, run
from .igt import (
    DataSplit,
    IGTEntry,
    WordExample,
    extract_word_examples,
    parse_igt_corpus,
    split_unique_words,
    word_example,
)
from .metrics import EvalReport, edit_distance_sum, evaluate_pairs, levenshtein, morpheme_f1, word_accuracy
from .model import ModelConfig, SegGlossModel, load_checkpoint, save_checkpoint
from .synth import FixtureClient, LiveClient, MorphemeInventory, StemRecord, SyntheticExample, mix
from .training import TrainConfig, TrainResult, joint_loss, train
from .vocab import Vocabularies, Vocabulary, build_vocabularies

__version__ = "0.1.0"

__all__ = [
    "DataSplit",
    "EvalReport",
    "ExperimentSpec",
    "FixtureClient",
    "Hypothesis",
    "IGTEntry",
    "LiveClient",
    "ModelConfig",
    "MorphemeInventory",
    "Prediction",
    "ResultRow",
    "SegGlossModel",
    "SegglossError",
    "StemRecord",
    "SyntheticExample",
    "TrainConfig",
    "TrainResult",
    "Vocabularies",
    "Vocabulary",
    "WordExample",
    "beam_search",
    "build_vocabularies",
    "decode_corpus",
    "edit_distance_sum",
    "evaluate_pairs",
    "extract_word_examples",
    "joint_loss",
    "levenshtein",
    "load_checkpoint",
    "mix",
    "morpheme_f1",
    "parse_igt_corpus",
    "run",
    "save_checkpoint",
    "split_unique_words",
    "train",
    "word_accuracy",
    "word_example",
]
