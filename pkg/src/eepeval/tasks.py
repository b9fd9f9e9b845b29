"""Task definitions: evaluation settings plus the event detector.

Tasks are stored as INI documents. A ``[task]`` section holds the
evaluation settings and names the detector; the detector's own section
holds its rule fields::

    [task]
    name = hyperkalemia
    horizon_h = 1
    probe_radius_b = 0.5, 4.0
    detector = threshold

    [threshold]
    codes = LOINC/6298-4, LOINC/2823-3
    direction = above
    threshold = 7

Detectors: ``threshold``, ``vitals`` (one ``[vital:<name>]`` section per
rule), ``esofa`` (optional ``[esofa]`` overrides) and ``marker``
(``code = ...``).
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from . import labeling as lb
from .errors import ConfigError, MissingVitals
from .event_model import Episode, ProbePolicy, TaskConfig

log = logging.getLogger(__name__)

PRESETS = ("hyperkalemia", "hypoglycemia", "decompensation", "sepsis", "icu_transfer", "mortality")
# marker task matching the synthetic generator's default planted event
BUILTIN = PRESETS + ("generic",)
DETECTORS = ("threshold", "vitals", "esofa", "marker")


@dataclass(frozen=True)
class Task:
    name: str
    config: TaskConfig
    detector: str
    threshold_rule: lb.ThresholdRule | None = None
    vital_rules: tuple[lb.VitalRule, ...] = ()
    esofa: lb.EsofaConfig = field(default_factory=lb.EsofaConfig)
    marker_code: str | None = None

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.detector == "threshold" and self.threshold_rule is None:
            raise ConfigError(f"task {self.name!r}: threshold detector needs a [threshold] section")
        if self.detector == "vitals" and not self.vital_rules:
            raise ConfigError(f"task {self.name!r}: vitals detector needs at least one [vital:...] section")
        if self.detector == "marker" and not self.marker_code:
            raise ConfigError(f"task {self.name!r}: marker detector needs a code")

    def with_config(self, **changes) -> "Task":
        cfg = self.config
        kw = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
        kw.update({k: v for k, v in changes.items() if v is not None})
        return Task(self.name, TaskConfig(**kw), self.detector, self.threshold_rule,
                    self.vital_rules, self.esofa, self.marker_code)


@dataclass(frozen=True)
class TaskLabel:
    in_cohort: bool
    outcome: lb.LabelOutcome


def label_episode(episode: Episode, task: Task) -> TaskLabel:
    """Apply the task's cohort restriction and event detector."""
    if task.detector == "threshold":
        t = lb.detect_threshold_event(episode, task.threshold_rule)
        trace = ((task.threshold_rule.name, t),) if t is not None else ()
        return TaskLabel(True, lb.LabelOutcome(episode.id, t, trace))
    if task.detector == "marker":
        t = lb.generic_event_label(episode, task.marker_code)
        trace = ((task.marker_code, t),) if t is not None else ()
        return TaskLabel(True, lb.LabelOutcome(episode.id, t, trace))
    if task.detector == "vitals":
        try:
            res = lb.detect_decompensation_onset(episode, task.vital_rules)
        except MissingVitals:
            return TaskLabel(False, lb.LabelOutcome(episode.id, None))
        trace = (("decompensation", res.onset),) if res.onset is not None else ()
        return TaskLabel(res.in_cohort, lb.LabelOutcome(episode.id, res.onset, trace))
    cohort = lb.sepsis_cohort_filter(episode)
    if not cohort:
        return TaskLabel(False, lb.LabelOutcome(episode.id, None, cohort.criteria_trace))
    return TaskLabel(True, lb.esofa_sepsis_label(episode, task.esofa))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _parse_fraction(text: str) -> float:
    num, sep, den = text.partition("/")
    return float(num) / float(den) if sep else float(num)


def task_from_ini(text: str, source: str = "<string>") -> Task:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if not parser.has_section("task"):
        raise ConfigError(f"{source}: missing [task] section")
    sec = parser["task"]
    try:
        cfg = TaskConfig(
            horizon_h=float(sec["horizon_h"]),
            probe_radius_b=_floats(sec["probe_radius_b"]),
            pairing_window_c=_parse_fraction(sec.get("pairing_window_c", "1/6")),
            alert_threshold_tau=float(sec.get("alert_threshold_tau", "0.5")),
            probe_policy=ProbePolicy.parse(sec.get("probe_policy", "every_observation")),
        )
        detector = sec["detector"].strip()
        name = sec.get("name", Path(source).stem).strip()
        kw: dict = {}
        if detector == "threshold":
            th = parser["threshold"]
            kw["threshold_rule"] = lb.ThresholdRule(
                th.get("name", name).strip(),
                frozenset(c.strip() for c in th["codes"].split(",") if c.strip()),
                lb.Direction(th["direction"].strip()),
                float(th["threshold"]),
            )
        elif detector == "vitals":
            kw["vital_rules"] = tuple(
                lb.VitalRule(s.split(":", 1)[1], parser[s]["vital"].strip(),
                             lb.Direction(parser[s]["direction"].strip()), float(parser[s]["threshold"]))
                for s in parser.sections() if s.startswith("vital:")
            )
        elif detector == "esofa" and parser.has_section("esofa"):
            known = {f.name for f in fields(lb.EsofaConfig)}
            extra = set(parser["esofa"]) - known
            if extra:
                raise ConfigError(f"{source}: unknown esofa keys {sorted(extra)}")
            kw["esofa"] = lb.EsofaConfig(**{k: float(v) for k, v in parser["esofa"].items()})
        elif detector == "marker":
            kw["marker_code"] = parser["marker"]["code"].strip()
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{source}: {type(exc).__name__}: {exc}") from exc
    return Task(name, cfg, detector, **kw)


def load_task(name_or_path: str) -> Task:
    """A shipped preset by name, or an INI task file by path."""
    if name_or_path in BUILTIN:
        text = resources.files("eepeval.presets").joinpath(f"{name_or_path}.ini").read_text()
        return task_from_ini(text, f"{name_or_path}.ini")
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(f"unknown task {name_or_path!r}; presets are {', '.join(BUILTIN)}")
    return task_from_ini(path.read_text(), str(path))


def task_to_ini(task: Task) -> str:
    cfg = task.config
    lines = [
        "[task]",
        f"name = {task.name}",
        f"horizon_h = {cfg.horizon_h!r}",
        f"probe_radius_b = {', '.join(repr(b) for b in cfg.probe_radius_b)}",
        f"pairing_window_c = {cfg.pairing_window_c!r}",
        f"alert_threshold_tau = {cfg.alert_threshold_tau!r}",
        f"probe_policy = {cfg.probe_policy}",
        f"detector = {task.detector}",
    ]
    if task.threshold_rule is not None:
        r = task.threshold_rule
        lines += ["", "[threshold]", f"name = {r.name}", f"codes = {', '.join(sorted(r.code_set))}",
                  f"direction = {r.direction.value}", f"threshold = {r.threshold!r}"]
    for r in task.vital_rules:
        lines += ["", f"[vital:{r.name}]", f"vital = {r.vital}", f"direction = {r.direction.value}",
                  f"threshold = {r.threshold!r}"]
    if task.detector == "esofa":
        lines += ["", "[esofa]"] + [f"{f.name} = {getattr(task.esofa, f.name)!r}" for f in fields(task.esofa)]
    if task.marker_code:
        lines += ["", "[marker]", f"code = {task.marker_code}"]
    return "\n".join(lines) + "\n"
