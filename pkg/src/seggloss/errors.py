"""Exception types shared across the toolkit."""


class SegglossError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SegglossError):
    """A corpus entry could not be parsed (strict mode aborts on these)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCorpusError(SegglossError):
    """The input file contains no IGT entries."""


class VocabularyError(SegglossError):
    """Vocabulary construction or lookup failed."""


class SequenceTooLongError(SegglossError):
    """An input exceeds the model's position budget."""


class DecoderUnavailableError(SegglossError):
    """The requested decoder does not exist in this model variant."""


class TrainingDivergedError(SegglossError):
    """The loss became non-finite during training."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


class GenerationError(SegglossError):
    """Synthetic-data generation failed (transport, retries exhausted, bad budget)."""


class FixtureMissingError(GenerationError):
    """Offline mode was asked for a prompt that has no stored response."""


class InsufficientSyntheticError(SegglossError):
    """The accepted synthetic pool is smaller than the requested mix size."""
