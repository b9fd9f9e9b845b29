"""Synthetic cohorts with planted events, and reference scorers.

Every episode carries a biomarker lab. In positives the biomarker climbs
linearly by ``hazard_lift`` over the ``horizon_h`` hours before the event and
stays elevated afterwards; in negatives it is stationary noise. The event
itself is planted as whatever observations make the chosen task's detector
fire exactly at the planted time.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import labeling as lb
from .errors import ConfigError, ProbeOutOfRange
from .event_model import CodedNumeric, Episode, Marker, Modality, Observation, validate_episode
from .metrics import RiskTrajectory

BIOMARKER = "BIOMARKER"
GENERIC_EVENT = "EVENT"
TASKS = (None, "hyperkalemia", "hypoglycemia", "decompensation", "sepsis", "icu_transfer", "mortality")


@dataclass(frozen=True)
class SynthConfig:
    n_episodes: int = 1000
    prevalence: float = 0.1
    mean_duration: float = 12.0
    observation_rate: float = 6.0
    hazard_lift: float = 1.0
    seed: int = 0
    horizon_h: float = 1.5
    task: str | None = None
    # event placement is u ** onset_skew across the feasible span; > 1 favours early onsets
    onset_skew: float = 3.0

    def __post_init__(self):
        if self.n_episodes <= 0:
            raise ConfigError("n_episodes must be positive")
        if not 0 < self.prevalence < 1:
            raise ConfigError("prevalence must lie in (0, 1)")
        if self.mean_duration <= 0 or self.observation_rate <= 0 or self.horizon_h <= 0:
            raise ConfigError("durations and rates must be positive")
        if self.onset_skew <= 0:
            raise ConfigError("onset_skew must be positive")
        if self.hazard_lift < 0:
            raise ConfigError("hazard_lift must be non-negative")
        if self.task not in TASKS:
            raise ConfigError(f"unknown synthetic task {self.task!r}")


def _normal_vital(rng, code: str) -> float:
    if code == lb.HEART_RATE:
        return float(np.clip(rng.normal(78.0, 6.0), 55.0, 99.0))
    if code == lb.SYSTOLIC_BP:
        return float(np.clip(rng.normal(122.0, 8.0), 95.0, 160.0))
    return float(np.clip(rng.normal(97.0, 1.0), 92.0, 100.0))


def _background(rng, task: str | None, duration: float) -> list[Observation]:
    obs = []
    if task in ("hyperkalemia", "hypoglycemia"):
        code = "LOINC/6298-4" if task == "hyperkalemia" else "LOINC/14749-6"
        mean, sd = (4.3, 0.3) if task == "hyperkalemia" else (5.5, 0.5)
        for t in np.arange(0.0, duration, 2.0):
            obs.append(Observation(Modality.LAB, CodedNumeric(code, round(float(rng.normal(mean, sd)), 2)), float(t)))
    elif task == "sepsis":
        obs.append(Observation(Modality.VITAL, CodedNumeric(lb.TEMPERATURE, 38.9), 0.0))
        obs.append(Observation(Modality.VITAL, CodedNumeric(lb.HEART_RATE, 96.0), 0.0))
        obs.append(Observation(Modality.LAB, CodedNumeric(lb.LACTATE, round(float(rng.normal(1.2, 0.15)), 2)), 0.0))
    return obs


def _planted(task: str | None, t_event: float) -> list[Observation]:
    if task is None:
        return [Observation(Modality.ADMIN, Marker(GENERIC_EVENT), t_event)]
    if task == "hyperkalemia":
        return [Observation(Modality.LAB, CodedNumeric("LOINC/6298-4", 7.6), t_event)]
    if task == "hypoglycemia":
        return [Observation(Modality.LAB, CodedNumeric("LOINC/14749-6", 2.4), t_event)]
    if task == "decompensation":
        return [Observation(Modality.VITAL, CodedNumeric(lb.HEART_RATE, 118.0), t_event)]
    if task == "sepsis":
        # culture, then a 84 h antibiotic run, then lactate: onset lands on t_event
        obs = [Observation(Modality.PROCEDURE, Marker(lb.BLOOD_CULTURE), t_event - 0.5)]
        obs += [Observation(Modality.MEDICATION, Marker(lb.ANTIBIOTIC_IV), t_event - 0.25 + 12.0 * k) for k in range(8)]
        obs.append(Observation(Modality.LAB, CodedNumeric(lb.LACTATE, 3.1), t_event))
        return obs
    code = lb.ICU_TRANSFER if task == "icu_transfer" else lb.DEATH
    return [Observation(Modality.ADMIN, Marker(code), t_event)]


def _episode(cfg: SynthConfig, index: int, positive: bool) -> Episode:
    rng = np.random.default_rng([cfg.seed, index])
    h = cfg.horizon_h
    duration = max(float(rng.gamma(2.0, cfg.mean_duration / 2.0)), 2.0 * h + 1.0)
    t_event = None
    if positive:
        t_event = h + 0.5 + (duration - 2.0 * h - 0.5) * float(rng.uniform()) ** cfg.onset_skew

    rate = cfg.observation_rate / 2.0
    bio_t = np.sort(np.concatenate([[0.0], rng.uniform(0.0, duration, rng.poisson(rate * duration))]))
    bio_v = 1.0 + rng.normal(0.0, 0.1, bio_t.size)
    if t_event is not None:
        ramp = np.clip((bio_t - (t_event - h)) / h, 0.0, 1.0)
        bio_v = bio_v + cfg.hazard_lift * ramp
    obs = [Observation(Modality.LAB, CodedNumeric(BIOMARKER, float(v)), float(t)) for t, v in zip(bio_t, bio_v)]

    vitals = (lb.HEART_RATE, lb.SYSTOLIC_BP, lb.SPO2)
    vital_t = rng.uniform(0.0, duration, rng.poisson(rate * duration))
    obs += [Observation(Modality.VITAL, CodedNumeric(code, _normal_vital(rng, code)), 0.0) for code in vitals]
    for t in vital_t:
        code = vitals[int(rng.integers(3))]
        obs.append(Observation(Modality.VITAL, CodedNumeric(code, _normal_vital(rng, code)), float(t)))
    obs.append(Observation(Modality.VITAL, CodedNumeric(lb.HEART_RATE, _normal_vital(rng, lb.HEART_RATE)), duration))
    obs += _background(rng, cfg.task, duration)
    if t_event is not None:
        obs += _planted(cfg.task, t_event)
    meta = {"synthetic": "true"}
    if t_event is not None:
        meta["planted_event_time"] = repr(t_event)
    return validate_episode(Episode(f"syn{cfg.seed}-{index:06d}", tuple(obs), None, meta))


def generate_cohort(cfg: SynthConfig) -> list[Episode]:
    """Deterministic cohort with exactly ``round(n * prevalence)`` positives.

    Each episode draws from its own generator seeded by ``(seed, index)``.
    Event times are not filled in; run the task's detector to label.
    """
    n_pos = int(round(cfg.n_episodes * cfg.prevalence))
    chosen = np.random.default_rng(cfg.seed).permutation(cfg.n_episodes)[:n_pos]
    positive = np.zeros(cfg.n_episodes, dtype=bool)
    positive[chosen] = True
    return [_episode(cfg, i, bool(positive[i])) for i in range(cfg.n_episodes)]


class ScorerKind(str, Enum):
    ORACLE = "oracle"
    WINDOWED_MEAN = "windowed_mean"
    NOISY = "noisy"
    CONSTANT = "constant"


@dataclass(frozen=True)
class ScorerSpec:
    """A bundled risk scorer.

    ``windowed_mean`` maps the mean biomarker over the trailing
    ``window_hours`` linearly from ``[low, high]`` onto ``[0, 1]``.
    """

    kind: ScorerKind
    sigma: float = 0.0
    value: float = 0.5
    horizon_h: float = 1.5
    seed: int = 0
    window_hours: float = 1.0
    low: float = 0.5
    high: float = 2.0
    biomarker_code: str = BIOMARKER

    def __post_init__(self):
        object.__setattr__(self, "kind", ScorerKind(self.kind))
        if self.sigma < 0:
            raise ConfigError("noise scale must be non-negative")
        if not 0 <= self.value <= 1:
            raise ConfigError("constant score must lie in [0, 1]")

    @classmethod
    def parse(cls, text: str, **kw) -> "ScorerSpec":
        """``oracle``, ``windowed_mean``, ``noisy:<sigma>`` or ``constant:<v>``."""
        kind, _, arg = text.strip().partition(":")
        kind = ScorerKind(kind.strip())
        if kind is ScorerKind.NOISY:
            return cls(kind, sigma=float(arg) if arg else 0.1, **kw)
        if kind is ScorerKind.CONSTANT:
            return cls(kind, value=float(arg) if arg else 0.5, **kw)
        return cls(kind, **kw)

    def __str__(self) -> str:
        if self.kind is ScorerKind.NOISY:
            return f"noisy:{self.sigma!r}"
        if self.kind is ScorerKind.CONSTANT:
            return f"constant:{self.value!r}"
        return self.kind.value


def _windowed(episode: Episode, probes: np.ndarray, spec: ScorerSpec) -> np.ndarray:
    pts = [(o.t, o.number) for o in episode.observations if o.code == spec.biomarker_code and o.number is not None]
    if not pts:
        return np.zeros(probes.size)
    bt = np.array([p[0] for p in pts])
    bv = np.array([p[1] for p in pts])
    csum = np.concatenate([[0.0], np.cumsum(bv)])
    hi = np.searchsorted(bt, probes, side="right")
    lo = np.searchsorted(bt, probes - spec.window_hours, side="right")
    n = hi - lo
    last = bv[np.maximum(hi - 1, 0)]
    mean = np.where(n > 0, (csum[hi] - csum[lo]) / np.maximum(n, 1), last)
    score = np.clip((mean - spec.low) / (spec.high - spec.low), 0.0, 1.0)
    return np.where(hi > 0, score, 0.0)


def _noise(episode_id: str, probes: np.ndarray, spec: ScorerSpec) -> np.ndarray:
    # seeded per (episode, probe time) so a prefix always gets the same score
    key = zlib.crc32(episode_id.encode())
    return np.array(
        [np.random.default_rng([spec.seed, key, int(round(t * 1e6))]).normal(0.0, spec.sigma) for t in probes]
    )


def score_trajectory(
    episode: Episode,
    probes: Sequence[float],
    spec: ScorerSpec,
    *,
    reference_time_T: float | None = None,
    span: tuple[float, float] | None = None,
) -> RiskTrajectory:
    """Score each prefix ``x_{<=t}`` of the episode at the given probe times.

    Probes must be sorted and lie within ``span`` (default: first to last
    observation).
    """
    probes = np.asarray(probes, dtype=np.float64)
    if span is None:
        span = (episode.start or 0.0, episode.end or 0.0)
    if probes.size:
        if np.any(np.diff(probes) <= 0):
            raise ProbeOutOfRange(f"{episode.id}: probes must be strictly increasing")
        if not np.all(np.isfinite(probes)) or probes[0] < span[0] or probes[-1] > span[1]:
            raise ProbeOutOfRange(
                f"{episode.id}: probes [{probes[0]!r}, {probes[-1]!r}] outside span [{span[0]!r}, {span[1]!r}]"
            )
    if spec.kind is ScorerKind.CONSTANT:
        scores = np.full(probes.size, spec.value)
    elif spec.kind is ScorerKind.ORACLE:
        scores = np.array([1.0 if lb.label_at(episode.event_time, t, spec.horizon_h) else 0.01 for t in probes])
    else:
        scores = _windowed(episode, probes, spec)
        if spec.kind is ScorerKind.NOISY and spec.sigma > 0:
            scores = np.clip(scores + _noise(episode.id, probes, spec), 0.0, 1.0)
    T = reference_time_T if reference_time_T is not None else (float(probes[-1]) if probes.size else math.nan)
    return RiskTrajectory(episode.id, tuple(probes.tolist()), tuple(scores.tolist()), T)
