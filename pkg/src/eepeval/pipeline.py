"""End-to-end run: label, truncate, sample, split, score, evaluate, aggregate."""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import io
from .errors import ConfigError, EEPError, StageError
from .event_model import Episode, ProbeKind, ProbePolicy, validate_cohort
from .metrics import FoldRow, MetricReport, RiskTrajectory, aggregate_folds, evaluate_fold, format_table
from .sampling import EvalInstance, assign_folds, sample_reference_times, truncate_horizon, with_folds
from .synth import ScorerSpec, score_trajectory
from .tasks import Task, TaskLabel, label_episode, load_task

log = logging.getLogger(__name__)

ARTIFACTS = {
    "labels": "labels.jsonl",
    "instances": "instances.jsonl",
    "trajectories": "trajectories.jsonl",
    "rows": "rows.jsonl",
    "report": "report.json",
    "table": "report.txt",
}


@dataclass(frozen=True)
class RunConfig:
    task: str
    events: Path
    out: Path
    seed: int = 0
    folds: int = 5
    scorer: str = "oracle"
    trajectories: Path | None = None
    b: tuple[float, ...] | None = None
    tau: float | None = None
    extra: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        paths = [Path(self.events).resolve(), Path(self.out).resolve()]
        if self.trajectories is not None:
            paths.append(Path(self.trajectories).resolve())
        if len(set(paths)) != len(paths):
            raise ConfigError("events, output and trajectory paths must be distinct")

    def resolve_task(self) -> Task:
        task = load_task(self.task)
        return task.with_config(probe_radius_b=self.b, alert_threshold_tau=self.tau)

    def path(self, artifact: str) -> Path:
        return Path(self.out) / ARTIFACTS[artifact]


RUN_KEYS = ("task", "events", "out", "seed", "folds", "scorer", "trajectories", "b", "tau")


def read_run_config(path: str | Path) -> dict[str, str]:
    """Raw ``[run]`` section of an INI config file."""
    parser = configparser.ConfigParser(interpolation=None)
    if not parser.read(path):
        raise ConfigError(f"cannot read config {path}")
    if not parser.has_section("run"):
        raise ConfigError(f"{path}: missing [run] section")
    values = dict(parser["run"])
    unknown = set(values) - set(RUN_KEYS)
    if unknown:
        log.warning("%s: ignoring unknown keys %s", path, sorted(unknown))
    return {k: v for k, v in values.items() if k in RUN_KEYS}


def label_cohort(episodes: Sequence[Episode], task: Task) -> tuple[list[TaskLabel], list[Episode]]:
    """Labels for every episode, and the in-cohort episodes with their event times set."""
    episodes = validate_cohort(episodes)
    labels = [label_episode(ep, task) for ep in episodes]
    cohort = [ep.with_event_time(lab.outcome.event_time) for ep, lab in zip(episodes, labels) if lab.in_cohort]
    return labels, cohort


def prepare(episodes: Sequence[Episode], task: Task) -> tuple[list[TaskLabel], list[Episode]]:
    labels, cohort = label_cohort(episodes, task)
    return labels, truncate_horizon(cohort, task.config.horizon_h)


def probe_times(episode: Episode, T: float, b: float, policy: ProbePolicy) -> list[float]:
    """Probe times in ``[T - b, T + b]``, never before the episode start, always including ``T``."""
    lo, hi = T - b, T + b
    start = episode.start if episode.start is not None else T
    if policy.kind is ProbeKind.FIXED_GRID:
        step = policy.step
        pts = {T + k * step for k in range(math.ceil(-b / step), math.floor(b / step) + 1)}
    else:
        pts = {t for t in episode.times if lo <= t <= hi}
        pts.add(T)
    return sorted(t for t in pts if t >= start)


def score_instances(
    episodes: Mapping[str, Episode], instances: Sequence[EvalInstance], task: Task, spec: ScorerSpec
) -> list[RiskTrajectory]:
    cfg = task.config
    b = max(cfg.probe_radius_b)
    out = []
    for inst in instances:
        ep = episodes[inst.episode_id]
        probes = probe_times(ep, inst.reference_time_T, b, cfg.probe_policy)
        out.append(
            score_trajectory(
                ep, probes, spec, reference_time_T=inst.reference_time_T,
                span=(ep.start, inst.reference_time_T + b),
            )
        )
    return out


def evaluate_instances(
    instances: Sequence[EvalInstance], trajectories: Mapping[str, RiskTrajectory], task: Task
) -> list[FoldRow]:
    by_fold: dict[int, list[EvalInstance]] = {}
    for inst in instances:
        by_fold.setdefault(inst.fold if inst.fold is not None else 0, []).append(inst)
    rows = []
    for fold in sorted(by_fold):
        rows += evaluate_fold(by_fold[fold], trajectories, task.config, task=task.name, fold=fold)
    return rows


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (EEPError, ValueError, OSError, KeyError)) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def run_pipeline(cfg: RunConfig) -> MetricReport:
    """Run every stage and write instances, trajectories, fold rows and report under ``cfg.out``."""
    with _Stage("config"):
        task = cfg.resolve_task()
        spec = None if cfg.trajectories else ScorerSpec.parse(cfg.scorer, horizon_h=task.config.horizon_h, seed=cfg.seed)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
    with _Stage("parse"):
        episodes = io.parse_event_file(cfg.events)
    with _Stage("label"):
        labels, cohort = label_cohort(episodes, task)
        io.write_labels(cfg.path("labels"), labels)
    with _Stage("truncate"):
        cohort = truncate_horizon(cohort, task.config.horizon_h)
    with _Stage("sample"):
        instances = sample_reference_times(cohort, task.config.horizon_h, cfg.seed)
    with _Stage("fold"):
        instances = with_folds(instances, assign_folds(instances, cfg.folds, cfg.seed))
        io.write_instances(cfg.path("instances"), instances)
    with _Stage("score"):
        if cfg.trajectories:
            trajectories = io.read_trajectories(cfg.trajectories)
        else:
            scored = score_instances(io.episodes_by_id(cohort), instances, task, spec)
            io.write_trajectories(cfg.path("trajectories"), scored)
            trajectories = {t.episode_id: t for t in scored}
    with _Stage("evaluate"):
        rows = evaluate_instances(instances, trajectories, task)
        io.write_rows(cfg.path("rows"), rows)
    with _Stage("aggregate"):
        report = aggregate_folds(rows)
        io.write_report(cfg.path("report"), report)
        cfg.path("table").write_text(format_table(report), encoding="utf-8")
    return report
