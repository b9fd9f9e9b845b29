"""Data model for irregular multi-modal event streams.

Times are hours relative to episode start. An episode is an immutable,
time-ordered tuple of observations; a model queried at reference time ``T``
may only see :func:`prefix` of the episode at ``T`` (boundary included).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence, Union

from .errors import (
    ConfigError,
    DuplicateEpisodeId,
    EmptyId,
    ModalityMismatch,
    NegativeTimestamp,
    NonFiniteValue,
)


class Modality(str, Enum):
    VITAL = "vital"
    LAB = "lab"
    MEDICATION = "medication"
    PROCEDURE = "procedure"
    WAVEFORM_SUMMARY = "waveform_summary"
    TEXT = "text"
    ADMIN = "admin"


@dataclass(frozen=True, slots=True)
class Numeric:
    value: float


@dataclass(frozen=True, slots=True)
class CodedNumeric:
    code: str
    value: float


@dataclass(frozen=True, slots=True)
class Text:
    text: str


@dataclass(frozen=True, slots=True)
class Marker:
    code: str


ObservationValue = Union[Numeric, CodedNumeric, Text, Marker]

PERMITTED_VALUES: dict[Modality, tuple[type, ...]] = {
    Modality.VITAL: (Numeric, CodedNumeric),
    Modality.LAB: (CodedNumeric,),
    Modality.MEDICATION: (Marker, CodedNumeric),
    Modality.PROCEDURE: (Marker, CodedNumeric),
    Modality.WAVEFORM_SUMMARY: (Numeric, CodedNumeric),
    Modality.TEXT: (Text,),
    Modality.ADMIN: (Marker, Text),
}


@dataclass(frozen=True, slots=True)
class Observation:
    modality: Modality
    value: ObservationValue
    t: float

    @property
    def code(self) -> str | None:
        v = self.value
        if isinstance(v, (CodedNumeric, Marker)):
            return v.code
        return None

    @property
    def number(self) -> float | None:
        v = self.value
        if isinstance(v, (Numeric, CodedNumeric)):
            return v.value
        return None


@dataclass(frozen=True)
class Episode:
    """One patient's observation stream.

    ``event_time`` is the first occurrence of the target event (``None`` for a
    negative episode). It is set by labeling, not by ingestion.
    """

    id: str
    observations: tuple[Observation, ...] = ()
    event_time: float | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    @cached_property
    def times(self) -> tuple[float, ...]:
        return tuple(o.t for o in self.observations)

    @property
    def start(self) -> float | None:
        return self.observations[0].t if self.observations else None

    @property
    def end(self) -> float | None:
        return self.observations[-1].t if self.observations else None

    def with_event_time(self, event_time: float | None) -> "Episode":
        return replace(self, event_time=event_time)


class ProbeKind(str, Enum):
    EVERY_OBSERVATION = "every_observation"
    FIXED_GRID = "fixed_grid"


@dataclass(frozen=True)
class ProbePolicy:
    kind: ProbeKind = ProbeKind.EVERY_OBSERVATION
    step: float | None = None

    def __post_init__(self):
        if self.kind is ProbeKind.FIXED_GRID:
            if self.step is None or not math.isfinite(self.step) or self.step <= 0:
                raise ConfigError("fixed_grid probe policy needs a positive finite step")

    @classmethod
    def parse(cls, text: str) -> "ProbePolicy":
        """Parse ``every_observation`` or ``fixed_grid:<step hours>``."""
        text = text.strip()
        if text == ProbeKind.EVERY_OBSERVATION.value:
            return cls()
        kind, _, step = text.partition(":")
        if kind.strip() == ProbeKind.FIXED_GRID.value and step:
            return cls(ProbeKind.FIXED_GRID, float(step))
        raise ConfigError(f"unknown probe policy {text!r}")

    def __str__(self) -> str:
        if self.kind is ProbeKind.FIXED_GRID:
            return f"fixed_grid:{self.step!r}"
        return self.kind.value


DEFAULT_PAIRING_WINDOW = 1.0 / 6.0  # 10 minutes
DEFAULT_ALERT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TaskConfig:
    """Evaluation hyperparameters for one prediction task (all times in hours)."""

    horizon_h: float
    probe_radius_b: tuple[float, ...]
    pairing_window_c: float = DEFAULT_PAIRING_WINDOW
    alert_threshold_tau: float = DEFAULT_ALERT_THRESHOLD
    probe_policy: ProbePolicy = ProbePolicy()

    def __post_init__(self):
        b = self.probe_radius_b
        if isinstance(b, (int, float)):
            b = (float(b),)
            object.__setattr__(self, "probe_radius_b", b)
        else:
            object.__setattr__(self, "probe_radius_b", tuple(float(x) for x in b))
        if not self.probe_radius_b:
            raise ConfigError("at least one probe radius is required")
        for name, value in (("horizon_h", self.horizon_h), ("pairing_window_c", self.pairing_window_c)):
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be finite and positive, got {value!r}")
        for radius in self.probe_radius_b:
            if not math.isfinite(radius) or radius <= 0:
                raise ConfigError(f"probe radius must be finite and positive, got {radius!r}")
            if self.pairing_window_c > 2 * radius:
                raise ConfigError(
                    f"pairing window {self.pairing_window_c} exceeds the probe window 2*b = {2 * radius}"
                )
        if not 0 < self.alert_threshold_tau < 1:
            raise ConfigError(f"alert threshold must lie in (0, 1), got {self.alert_threshold_tau!r}")


def _check_finite_value(value: ObservationValue, index: int) -> None:
    if isinstance(value, (Numeric, CodedNumeric)) and not math.isfinite(value.value):
        raise NonFiniteValue(f"non-finite value {value.value!r}", index=index)
    if isinstance(value, CodedNumeric) and not value.code:
        raise ModalityMismatch("coded value with empty code", index=index)
    if isinstance(value, Marker) and not value.code:
        raise ModalityMismatch("marker with empty code", index=index)


def validate_observation(obs: Observation, index: int = 0) -> None:
    if not math.isfinite(obs.t):
        raise NonFiniteValue(f"non-finite timestamp {obs.t!r}", index=index)
    if obs.t < 0:
        raise NegativeTimestamp(f"timestamp {obs.t!r} is negative", index=index)
    if not isinstance(obs.value, PERMITTED_VALUES[Modality(obs.modality)]):
        raise ModalityMismatch(
            f"{type(obs.value).__name__} value not permitted for modality {Modality(obs.modality).value}",
            index=index,
        )
    _check_finite_value(obs.value, index)


def validate_episode(raw: Episode) -> Episode:
    """Check every invariant and return the episode with observations sorted by time.

    The sort is stable, so observations sharing a timestamp keep input order.
    Empty episodes are valid and get ``metadata["empty"] = "true"``.
    """
    if not raw.id:
        raise EmptyId("episode id is empty")
    for i, obs in enumerate(raw.observations):
        validate_observation(obs, i)
    if raw.event_time is not None:
        if not math.isfinite(raw.event_time):
            raise NonFiniteValue(f"non-finite event time {raw.event_time!r}")
        if raw.event_time < 0:
            raise NegativeTimestamp(f"event time {raw.event_time!r} is negative")
    ordered = tuple(sorted(raw.observations, key=lambda o: o.t))
    metadata = dict(raw.metadata)
    if not ordered:
        metadata["empty"] = "true"
    return Episode(raw.id, ordered, raw.event_time, metadata)


def validate_cohort(episodes: Sequence[Episode]) -> list[Episode]:
    """Validate each episode and require ids to be unique within the cohort."""
    seen: set[str] = set()
    out = []
    for i, ep in enumerate(episodes):
        if ep.id in seen:
            raise DuplicateEpisodeId(f"episode id {ep.id!r} repeated at cohort position {i}")
        seen.add(ep.id)
        out.append(validate_episode(ep))
    return out


def prefix(episode: Episode, T: float) -> tuple[Observation, ...]:
    """Observations with ``t <= T``, in order."""
    return episode.observations[: bisect.bisect_right(episode.times, T)]
