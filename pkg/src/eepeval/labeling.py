"""Event detection and horizon labels.

Detectors scan a validated episode and return the first time the event
fires. Thresholds are strict (``above`` means ``v > threshold``). Missing
measurements never raise; a criterion with no data simply does not fire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import ConfigError, MissingVitals
from .event_model import Episode, Marker, Modality

HOURS_PER_DAY = 24.0

# Observation codes understood by the built-in detectors.
HEART_RATE = "heart_rate"
SYSTOLIC_BP = "systolic_bp"
SPO2 = "spo2"
TEMPERATURE = "temperature"
RESP_RATE = "resp_rate"
WBC = "wbc"  # 10^3 cells/uL
CREATININE = "creatinine"  # mg/dL
BILIRUBIN = "bilirubin"  # mg/dL
PLATELETS = "platelets"  # 10^3 cells/uL
LACTATE = "lactate"  # mmol/L
BLOOD_CULTURE = "BLOOD_CULTURE"
ANTIBIOTIC_IV = "ANTIBIOTIC_IV"
VASOPRESSOR = "VASOPRESSOR"
MECH_VENT = "MECH_VENT"
ICU_TRANSFER = "ICU_TRANSFER"
DEATH = "DEATH"

HYPERKALEMIA_CODES = frozenset(
    {"LOINC/LG7931-1", "LOINC/LP386618-5", "LOINC/LG10990-6", "LOINC/6298-4", "LOINC/2823-3"}
)
HYPOGLYCEMIA_CODES = frozenset({"SNOMED/33747003", "LOINC/LP416145-3", "LOINC/14749-6"})


class Direction(str, Enum):
    ABOVE = "above"
    BELOW = "below"

    def fires(self, value: float, threshold: float) -> bool:
        if self is Direction.ABOVE:
            return value > threshold
        return value < threshold


@dataclass(frozen=True)
class ThresholdRule:
    name: str
    code_set: frozenset[str]
    direction: Direction
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "code_set", frozenset(self.code_set))
        object.__setattr__(self, "direction", Direction(self.direction))
        if not self.code_set:
            raise ConfigError(f"rule {self.name!r} has an empty code set")
        if not math.isfinite(self.threshold):
            raise ConfigError(f"rule {self.name!r} threshold must be finite")


@dataclass(frozen=True)
class VitalRule:
    name: str
    vital: str
    direction: Direction
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if not math.isfinite(self.threshold) or self.threshold <= 0:
            raise ConfigError(f"vital rule {self.name!r} threshold must be finite and positive")


DEFAULT_VITAL_RULES = (
    VitalRule("tachycardia", HEART_RATE, Direction.ABOVE, 100.0),
    VitalRule("hypotension", SYSTOLIC_BP, Direction.BELOW, 90.0),
    VitalRule("hypoxia", SPO2, Direction.BELOW, 90.0),
)


@dataclass(frozen=True)
class EsofaConfig:
    culture_window_days: float = 2.0
    antibiotic_coverage_hours: float = 72.0
    max_gap_between_doses_hours: float = 24.0
    lactate_threshold: float = 2.0
    bilirubin_threshold: float = 2.0
    platelet_threshold: float = 100.0
    platelet_decline_frac: float = 0.5
    creatinine_doubling_frac: float = 2.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"esofa {name} must be finite and positive, got {value!r}")

    @property
    def culture_window_hours(self) -> float:
        return self.culture_window_days * HOURS_PER_DAY


@dataclass(frozen=True)
class LabelOutcome:
    episode_id: str
    event_time: float | None
    criteria_trace: tuple[tuple[str, float], ...] = field(default=())

    @property
    def positive(self) -> bool:
        return self.event_time is not None


@dataclass(frozen=True)
class CohortDecision:
    included: bool
    criteria_trace: tuple[tuple[str, float], ...] = ()

    def __bool__(self) -> bool:
        return self.included


@dataclass(frozen=True)
class DecompensationOutcome:
    onset: float | None
    in_cohort: bool


def label_at(event_time: float | None, T: float, h: float) -> int:
    """1 iff the event falls in ``(T, T + h]``."""
    if event_time is None:
        return 0
    return int(T < event_time <= T + h)


def _coded(
    episode: Episode, codes: Iterable[str], modality: Modality | None = None
) -> Iterator[tuple[float, float]]:
    codes = frozenset(codes)
    for obs in episode.observations:
        if modality is not None and obs.modality is not modality:
            continue
        if obs.code in codes and obs.number is not None:
            yield obs.t, obs.number


def _marker_times(episode: Episode, code: str) -> list[float]:
    # medication doses may arrive as coded numerics (code plus dose amount)
    return [o.t for o in episode.observations if o.code == code]


def detect_threshold_event(episode: Episode, rule: ThresholdRule) -> float | None:
    for t, v in _coded(episode, rule.code_set, Modality.LAB):
        if rule.direction.fires(v, rule.threshold):
            return t
    return None


def detect_decompensation_onset(
    episode: Episode, rules: Iterable[VitalRule] = DEFAULT_VITAL_RULES
) -> DecompensationOutcome:
    """First time any vital rule fires, restricted to initially-normal patients.

    The cohort requires the first reading of each monitored vital to be
    normal; a vital that is never recorded does not exclude the episode.
    """
    rules = tuple(rules)
    vitals = [o for o in episode.observations if o.modality is Modality.VITAL]
    if not vitals:
        raise MissingVitals(f"episode {episode.id!r} has no vital observations")
    seen: set[str] = set()
    onset = None
    for obs in vitals:
        if obs.code is None:
            continue
        value = obs.number
        first = obs.code not in seen
        seen.add(obs.code)
        for rule in rules:
            if rule.vital != obs.code or not rule.direction.fires(value, rule.threshold):
                continue
            if first:
                return DecompensationOutcome(None, False)
            if onset is None:
                onset = obs.t
    return DecompensationOutcome(onset, True)


def generic_event_label(episode: Episode, event_code: str) -> float | None:
    for obs in episode.observations:
        if isinstance(obs.value, Marker) and obs.value.code == event_code:
            return obs.t
    return None


def sepsis_cohort_filter(episode: Episode) -> CohortDecision:
    """Suspected-infection inclusion criteria.

    (a) temperature < 36 or > 38.5 within 24 h of admission (first such time is
    ``Temp_time``); (b) WBC > 12 or < 4, HR > 90, or RR > 20 within 24 h;
    (c) one of the (b) measurements within 12 h of ``Temp_time``; (d) no IV
    antibiotic at or before the earliest criterion time. An explicit
    ``admission_source`` other than ED excludes the episode.
    """
    trace: list[tuple[str, float]] = []
    source = episode.metadata.get("admission_source")
    if source is not None and source.upper() != "ED":
        return CohortDecision(False, ())
    start = episode.start
    if start is None:
        return CohortDecision(False, ())
    day_end = start + 24.0

    temp_time = None
    for t, v in _coded(episode, (TEMPERATURE,), Modality.VITAL):
        if t <= day_end and (v < 36.0 or v > 38.5):
            temp_time = t
            break
    if temp_time is None:
        return CohortDecision(False, ())
    trace.append(("temperature", temp_time))

    sirs: list[tuple[str, float]] = []
    for t, v in _coded(episode, (WBC,), Modality.LAB):
        if t <= day_end and (v > 12.0 or v < 4.0):
            sirs.append(("wbc", t))
    for t, v in _coded(episode, (HEART_RATE,), Modality.VITAL):
        if t <= day_end and v > 90.0:
            sirs.append(("heart_rate", t))
    for t, v in _coded(episode, (RESP_RATE,), Modality.VITAL):
        if t <= day_end and v > 20.0:
            sirs.append(("resp_rate", t))
    if not sirs:
        return CohortDecision(False, tuple(trace))
    paired = sorted(
        ((t, name) for name, t in sirs if abs(t - temp_time) <= 12.0), key=lambda x: x[0]
    )
    if not paired:
        return CohortDecision(False, tuple(trace))
    t_pair, name = paired[0]
    trace.append((name, t_pair))

    first_met = min(temp_time, min(t for _, t in sirs))
    if any(t <= first_met for t in _marker_times(episode, ANTIBIOTIC_IV)):
        return CohortDecision(False, tuple(trace))
    return CohortDecision(True, tuple(sorted(trace, key=lambda x: x[1])))


def antibiotic_chains(dose_times: Iterable[float], max_gap: float) -> list[tuple[float, ...]]:
    """Split sorted dose times into runs whose consecutive gaps are <= ``max_gap``."""
    chains: list[list[float]] = []
    for t in sorted(dose_times):
        if chains and t - chains[-1][-1] <= max_gap:
            chains[-1].append(t)
        else:
            chains.append([t])
    return [tuple(c) for c in chains]


def _qad_start(chains, lo: float, hi: float, cfg: EsofaConfig) -> float | None:
    # earliest in-window dose from which the rest of its chain still covers the requirement
    best = None
    for chain in chains:
        end = chain[-1]
        for s in chain:
            if s < lo:
                continue
            if s <= hi and end - s >= cfg.antibiotic_coverage_hours and (best is None or s < best):
                best = s
            break
    return best


def _organ_dysfunction(episode: Episode, lo: float, hi: float, cfg: EsofaConfig) -> list[tuple[str, float]]:
    found: list[tuple[str, float]] = []

    def initiation(code: str, name: str) -> None:
        times = _marker_times(episode, code)
        if times and lo <= times[0] <= hi:
            found.append((name, times[0]))

    initiation(VASOPRESSOR, "vasopressor")
    initiation(MECH_VENT, "mechanical_ventilation")

    creat = list(_coded(episode, (CREATININE,), Modality.LAB))
    if creat and episode.metadata.get("eskd", "").lower() not in ("1", "true", "yes"):
        base = creat[0][1]
        for t, v in creat:
            if lo <= t <= hi and v >= cfg.creatinine_doubling_frac * base:
                found.append(("creatinine", t))
                break

    bili = list(_coded(episode, (BILIRUBIN,), Modality.LAB))
    if bili:
        base = bili[0][1]
        for t, v in bili:
            if lo <= t <= hi and v >= cfg.bilirubin_threshold and v >= 2.0 * base:
                found.append(("bilirubin", t))
                break

    plt = list(_coded(episode, (PLATELETS,), Modality.LAB))
    if plt and plt[0][1] >= cfg.platelet_threshold:
        base = plt[0][1]
        for t, v in plt:
            if lo <= t <= hi and v < cfg.platelet_threshold and v <= (1.0 - cfg.platelet_decline_frac) * base:
                found.append(("platelets", t))
                break

    for t, v in _coded(episode, (LACTATE,), Modality.LAB):
        if lo <= t <= hi and v >= cfg.lactate_threshold:
            found.append(("lactate", t))
            break
    return sorted(found, key=lambda x: x[1])


def esofa_sepsis_label(episode: Episode, cfg: EsofaConfig = EsofaConfig()) -> LabelOutcome:
    """Sepsis label from blood culture, antibiotic coverage and organ dysfunction.

    Each group counts as satisfied from its own time: the culture time, the
    first dose of the qualifying antibiotic run, and the first organ
    dysfunction criterion. The event time is the earliest point where all
    three hold together, minimized over cultures.
    """
    cultures = _marker_times(episode, BLOOD_CULTURE)
    if not cultures:
        return LabelOutcome(episode.id, None, ())
    chains = antibiotic_chains(_marker_times(episode, ANTIBIOTIC_IV), cfg.max_gap_between_doses_hours)
    window = cfg.culture_window_hours

    best: tuple[float, tuple[tuple[str, float], ...]] | None = None
    partial: tuple[tuple[str, float], ...] | None = None
    for tc in cultures:
        lo, hi = tc - window, tc + window
        trace = [("blood_culture", tc)]
        qad = _qad_start(chains, lo, hi, cfg)
        if qad is not None:
            trace.append(("qad", qad))
        organ = _organ_dysfunction(episode, lo, hi, cfg)
        trace.extend(organ)
        if qad is None or not organ:
            if partial is None:
                partial = tuple(trace)
            continue
        onset = max(tc, qad, organ[0][1])
        if best is None or onset < best[0]:
            best = (onset, tuple(trace))
    if best is None:
        return LabelOutcome(episode.id, None, partial or ())
    return LabelOutcome(episode.id, best[0], best[1])
