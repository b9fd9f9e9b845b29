"""Exception hierarchy shared by every stage of the toolkit."""

from __future__ import annotations


class EEPError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(EEPError):
    """An episode or record violates a data-model invariant.

    ``index`` is the position of the first offending observation within the
    episode as supplied; ``line`` is the 1-based line number when the error
    originates from a file.
    """

    def __init__(self, message: str, *, index: int | None = None, line: int | None = None):
        self.detail = message
        self.index = index
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if index is not None:
            where.append(f"observation {index}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NegativeTimestamp(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class EmptyId(ValidationError):
    pass


class DuplicateEpisodeId(ValidationError):
    pass


class MalformedRecord(ValidationError):
    pass


class ModalityMismatch(MalformedRecord):
    """The value variant is not permitted for the observation's modality."""


class UnknownModality(ValidationError):
    pass


class MissingVitals(EEPError):
    pass


class InsufficientSupport(EEPError):
    """Negatives cannot populate one of the positive elapsed-history bins."""

    def __init__(self, bin_index: int, low: float, high: float, needed: int, available: int):
        self.bin_index = bin_index
        self.low = low
        self.high = high
        super().__init__(
            f"elapsed-history bin {bin_index} [{low:.4g}, {high:.4g}] needs {needed} "
            f"negatives but only {available} can reach it"
        )


class EmptyInput(EEPError):
    pass


class TooFewPositives(EEPError):
    pass


class OneClassOnly(EEPError):
    pass


class InvalidTrajectory(EEPError):
    pass


class MissingTrajectory(EEPError):
    def __init__(self, episode_id: str, reason: str = "no trajectory"):
        self.episode_id = episode_id
        super().__init__(f"{reason} for episode {episode_id!r}")


class ProbeOutOfRange(EEPError):
    pass


class ConfigError(EEPError):
    pass


class StageError(EEPError):
    """Wraps an error raised inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
