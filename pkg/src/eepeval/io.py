"""Line-delimited JSON files exchanged between pipeline stages.

========================  =====================================================
file                      one record per line
========================  =====================================================
events                    episode_id, modality, code (optional), value, t_hours
labels                    episode_id, in_cohort, positive, event_time, criteria_trace
instances                 episode_id, T_hours, label, elapsed_history, fold
trajectories              episode_id, T_hours, points ([[t, score], ...])
rows                      task, fold, b, auroc, auprc, f1, stability, flips, n, prevalence, ...
========================  =====================================================

Writers use ``sort_keys`` and ``repr``-exact floats so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import (
    EEPError,
    MalformedRecord,
    NegativeTimestamp,
    NonFiniteValue,
    UnknownModality,
    ValidationError,
)
from .event_model import (
    CodedNumeric,
    Episode,
    Marker,
    Modality,
    Numeric,
    Observation,
    Text,
    validate_episode,
)
from .labeling import LabelOutcome
from .metrics import FoldRow, MetricReport, RiskTrajectory, SUMMARY_METRICS
from .sampling import EvalInstance
from .tasks import TaskLabel

log = logging.getLogger(__name__)

EVENT_FIELDS = ("episode_id", "modality", "code", "value", "t_hours")
_TEXTUAL = (Modality.TEXT, Modality.ADMIN)


def _dump(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(_dump(rec))
            fh.write("\n")


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line number, record)``; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(rec, dict):
                raise MalformedRecord("record is not an object", line=lineno)
            yield lineno, rec


def _number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def observation_from_record(rec: dict, lineno: int) -> tuple[str, Observation]:
    episode_id = rec.get("episode_id")
    if not isinstance(episode_id, str):
        raise MalformedRecord("episode_id missing or not a string", line=lineno)
    try:
        modality = Modality(rec.get("modality"))
    except ValueError:
        raise UnknownModality(f"unknown modality {rec.get('modality')!r}", line=lineno) from None
    t = rec.get("t_hours")
    if not _number(t):
        raise MalformedRecord("t_hours missing or not a number", line=lineno)
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteValue(f"non-finite t_hours {t!r}", line=lineno)
    if t < 0:
        raise NegativeTimestamp(f"t_hours {t!r} is negative", line=lineno)
    code = rec.get("code")
    if code is not None and not isinstance(code, str):
        raise MalformedRecord("code must be a string", line=lineno)
    value = rec.get("value")
    if _number(value):
        obs_value = CodedNumeric(code, float(value)) if code else Numeric(float(value))
    elif isinstance(value, str):
        if code:
            obs_value = Marker(code)
        elif modality in _TEXTUAL:
            obs_value = Text(value)
        else:
            obs_value = Marker(value)
    elif value is None and code:
        obs_value = Marker(code)
    else:
        raise MalformedRecord("value must be a number or string", line=lineno)
    return episode_id, Observation(modality, obs_value, t)


def observation_to_record(episode_id: str, obs: Observation) -> dict:
    rec = {"episode_id": episode_id, "modality": obs.modality.value, "t_hours": obs.t}
    v = obs.value
    if isinstance(v, CodedNumeric):
        rec["code"], rec["value"] = v.code, v.value
    elif isinstance(v, Numeric):
        rec["value"] = v.value
    elif isinstance(v, Marker):
        rec["code"], rec["value"] = v.code, v.code
    else:
        rec["value"] = v.text
    return rec


def parse_event_file(path: str | Path) -> list[Episode]:
    """Group event records by episode (first-appearance order) and validate each."""
    grouped: dict[str, tuple[list[Observation], list[int]]] = {}
    warned: set[str] = set()
    for lineno, rec in iter_jsonl(path):
        unknown = set(rec) - set(EVENT_FIELDS) - warned
        if unknown:
            log.warning("line %d: ignoring unknown fields %s", lineno, sorted(unknown))
            warned |= unknown
        episode_id, obs = observation_from_record(rec, lineno)
        observations, lines = grouped.setdefault(episode_id, ([], []))
        observations.append(obs)
        lines.append(lineno)
    episodes = []
    for episode_id, (observations, lines) in grouped.items():
        try:
            episodes.append(validate_episode(Episode(episode_id, tuple(observations))))
        except ValidationError as exc:
            line = lines[exc.index] if exc.index is not None else lines[0]
            raise type(exc)(exc.detail, index=exc.index, line=line) from None
    return episodes


def write_event_file(path: str | Path, episodes: Iterable[Episode]) -> None:
    write_jsonl(path, (observation_to_record(ep.id, o) for ep in episodes for o in ep.observations))


def label_to_record(label: TaskLabel) -> dict:
    out = label.outcome
    return {
        "episode_id": out.episode_id,
        "in_cohort": label.in_cohort,
        "positive": out.positive,
        "event_time": out.event_time,
        "criteria_trace": [[name, t] for name, t in out.criteria_trace],
    }


def write_labels(path, labels: Iterable[TaskLabel]) -> None:
    write_jsonl(path, (label_to_record(lab) for lab in labels))


def read_labels(path) -> list[TaskLabel]:
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            et = rec["event_time"]
            outcome = LabelOutcome(
                str(rec["episode_id"]),
                None if et is None else float(et),
                tuple((str(n), float(t)) for n, t in rec["criteria_trace"]),
            )
            out.append(TaskLabel(bool(rec["in_cohort"]), outcome))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad label record: {exc}", line=lineno) from None
    return out


def write_instances(path, instances: Iterable[EvalInstance]) -> None:
    write_jsonl(path, (inst.as_record() for inst in instances))


def read_instances(path) -> list[EvalInstance]:
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            out.append(EvalInstance.from_record(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad instance record: {exc}", line=lineno) from None
    return out


def trajectory_to_record(traj: RiskTrajectory) -> dict:
    return {
        "episode_id": traj.episode_id,
        "T_hours": traj.reference_time_T,
        "points": [[t, s] for t, s in zip(traj.times, traj.scores)],
    }


def write_trajectories(path, trajectories: Iterable[RiskTrajectory]) -> None:
    write_jsonl(path, (trajectory_to_record(t) for t in trajectories))


def read_trajectories(path) -> dict[str, RiskTrajectory]:
    """Trajectory file keyed by episode id; this is the entry point for external models."""
    out: dict[str, RiskTrajectory] = {}
    for lineno, rec in iter_jsonl(path):
        try:
            traj = RiskTrajectory.from_points(
                str(rec["episode_id"]), [(float(t), float(s)) for t, s in rec["points"]], float(rec["T_hours"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad trajectory record: {exc}", line=lineno) from None
        except EEPError as exc:
            raise MalformedRecord(str(exc), line=lineno) from None
        if traj.episode_id in out:
            raise MalformedRecord(f"duplicate trajectory for {traj.episode_id!r}", line=lineno)
        out[traj.episode_id] = traj
    return out


def write_rows(path, rows: Iterable[FoldRow]) -> None:
    write_jsonl(path, (r.as_record() for r in rows))


def read_rows(path) -> list[FoldRow]:
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            out.append(FoldRow.from_record(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad row record: {exc}", line=lineno) from None
    return out


def write_report(path, report: MetricReport) -> None:
    rec = report.as_record()
    rec["rows"] = [r.as_record() for r in report.rows]
    Path(path).write_text(json.dumps(rec, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def read_report(path) -> MetricReport:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    aggregate = {
        float(entry["b"]): {m: (float(entry[m]["mean"]), float(entry[m]["std"])) for m in SUMMARY_METRICS}
        for entry in rec["aggregate"]
    }
    rows = tuple(FoldRow.from_record(r) for r in rec["rows"])
    return MetricReport(rec["task"], rows, aggregate, int(rec["n_instances"]), int(rec["n_positive"]))


def episodes_by_id(episodes: Sequence[Episode]) -> dict[str, Episode]:
    return {ep.id: ep for ep in episodes}
