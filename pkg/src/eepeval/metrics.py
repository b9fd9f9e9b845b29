"""Accuracy and temporal-stability metrics over risk trajectories.

Accuracy (AUROC, AUPRC, F1) is computed from the score each instance
receives at its reference time. Stability is a local Lipschitz estimate: the
mean of ``|f(t) - f(t')| / |t - t'|`` over probe pairs at most ``c`` hours
apart inside ``[T - b, T + b]``. Flips count alert-state changes
(``score >= tau``) between consecutive probes in the same window.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import InvalidTrajectory, MissingTrajectory, OneClassOnly
from .event_model import TaskConfig


@dataclass(frozen=True)
class RiskTrajectory:
    """Risk scores of one episode probed at increasing times."""

    episode_id: str
    times: tuple[float, ...]
    scores: tuple[float, ...]
    reference_time_T: float

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.times) != len(self.scores):
            raise InvalidTrajectory(f"{self.episode_id}: {len(self.times)} times vs {len(self.scores)} scores")
        for i, (t, s) in enumerate(zip(self.times, self.scores)):
            if not math.isfinite(t):
                raise InvalidTrajectory(f"{self.episode_id}: non-finite probe time at point {i}")
            if not (math.isfinite(s) and 0.0 <= s <= 1.0):
                raise InvalidTrajectory(f"{self.episode_id}: score {s!r} at point {i} outside [0, 1]")
            if i and t <= self.times[i - 1]:
                raise InvalidTrajectory(f"{self.episode_id}: probe times not strictly increasing at point {i}")
        if not math.isfinite(self.reference_time_T):
            raise InvalidTrajectory(f"{self.episode_id}: non-finite reference time")

    @classmethod
    def from_points(cls, episode_id: str, points: Iterable[tuple[float, float]], reference_time_T: float):
        points = list(points)
        return cls(episode_id, tuple(p[0] for p in points), tuple(p[1] for p in points), reference_time_T)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.scores))

    def window(self, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Probe times and scores restricted to ``[T - b, T + b]``."""
        T = self.reference_time_T
        lo = bisect.bisect_left(self.times, T - b)
        hi = bisect.bisect_right(self.times, T + b)
        return kernels.as_f64(self.times[lo:hi]), kernels.as_f64(self.scores[lo:hi])

    def score_at(self, T: float | None = None) -> float:
        """Score at the latest probe not after ``T`` (default: the reference time)."""
        T = self.reference_time_T if T is None else T
        i = bisect.bisect_right(self.times, T)
        if i == 0:
            raise MissingTrajectory(self.episode_id, f"no probe at or before T={T!r}")
        return self.scores[i - 1]


@dataclass(frozen=True)
class StabilityResult:
    episode_id: str
    L_c: float
    pair_count: int

    @property
    def degenerate(self) -> bool:
        return self.pair_count == 0


@dataclass(frozen=True)
class AlertTrace:
    episode_id: str
    states: tuple[tuple[float, int], ...]
    flips: int


def _split(scores_pos, scores_neg):
    pos = kernels.as_f64(scores_pos)
    neg = kernels.as_f64(scores_neg)
    if pos.size == 0 or neg.size == 0:
        raise OneClassOnly(f"need both classes, got {pos.size} positive and {neg.size} negative scores")
    return pos, neg


def auroc(scores_pos: Sequence[float], scores_neg: Sequence[float], *, backend: str | None = None) -> float:
    """Probability a positive outranks a negative, ties counted as one half."""
    pos, neg = _split(scores_pos, scores_neg)
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, np.int8), np.zeros(neg.size, np.int8)])
    order = np.argsort(scores, kind="stable")
    u = kernels.get_backend(backend).mann_whitney_u(kernels.as_f64(scores[order]), kernels.as_i8(labels[order]))
    return u / (pos.size * neg.size)


def auprc(scores_pos: Sequence[float], scores_neg: Sequence[float], *, backend: str | None = None) -> float:
    """Average precision without interpolation."""
    pos = kernels.as_f64(scores_pos)
    neg = kernels.as_f64(scores_neg)
    if pos.size == 0:
        raise OneClassOnly("average precision needs at least one positive")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, np.int8), np.zeros(neg.size, np.int8)])
    order = np.argsort(-scores, kind="stable")
    return kernels.get_backend(backend).average_precision(kernels.as_f64(scores[order]), kernels.as_i8(labels[order]))


def f1_at_threshold(scores_pos: Sequence[float], scores_neg: Sequence[float], tau: float = 0.5) -> float:
    tp = sum(1 for s in scores_pos if s >= tau)
    fp = sum(1 for s in scores_neg if s >= tau)
    fn = len(scores_pos) - tp
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def stability_Lc(traj: RiskTrajectory, b: float, c: float, *, backend: str | None = None) -> StabilityResult:
    times, scores = traj.window(b)
    total, count = kernels.get_backend(backend).lipschitz_pairs(times, scores, c)
    if count == 0:
        return StabilityResult(traj.episode_id, 0.0, 0)
    return StabilityResult(traj.episode_id, total / count, int(count))


def flip_count(traj: RiskTrajectory, b: float, tau: float = 0.5, *, backend: str | None = None) -> AlertTrace:
    times, scores = traj.window(b)
    flips = kernels.get_backend(backend).count_flips(scores, tau)
    states = tuple((float(t), int(s >= tau)) for t, s in zip(times, scores))
    return AlertTrace(traj.episode_id, states, int(flips))


@dataclass(frozen=True)
class FoldRow:
    task: str
    fold: int
    b: float
    auroc: float
    auprc: float
    f1: float
    stability: float
    stability_inclusive: float
    flips: float
    n: int
    n_positive: int
    n_degenerate: int

    @property
    def prevalence(self) -> float:
        return self.n_positive / self.n if self.n else 0.0

    def as_record(self) -> dict:
        return {
            "task": self.task,
            "fold": self.fold,
            "b": self.b,
            "auroc": self.auroc,
            "auprc": self.auprc,
            "f1": self.f1,
            "stability": self.stability,
            "stability_inclusive": self.stability_inclusive,
            "flips": self.flips,
            "n": self.n,
            "n_positive": self.n_positive,
            "n_degenerate": self.n_degenerate,
            "prevalence": self.prevalence,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "FoldRow":
        return cls(
            task=str(rec["task"]),
            fold=int(rec["fold"]),
            b=float(rec["b"]),
            auroc=float(rec["auroc"]),
            auprc=float(rec["auprc"]),
            f1=float(rec["f1"]),
            stability=float(rec["stability"]),
            stability_inclusive=float(rec["stability_inclusive"]),
            flips=float(rec["flips"]),
            n=int(rec["n"]),
            n_positive=int(rec["n_positive"]),
            n_degenerate=int(rec["n_degenerate"]),
        )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def evaluate_fold(
    instances: Sequence,
    trajectories: Mapping[str, RiskTrajectory],
    cfg: TaskConfig,
    *,
    task: str = "",
    fold: int = 0,
) -> list[FoldRow]:
    """One metric row per probe radius for the given fold's instances.

    ``stability`` averages only instances with at least one local pair;
    ``stability_inclusive`` also counts pair-free instances as zero.
    """
    pos: list[float] = []
    neg: list[float] = []
    trajs: list[RiskTrajectory] = []
    for inst in instances:
        traj = trajectories.get(inst.episode_id)
        if traj is None:
            raise MissingTrajectory(inst.episode_id)
        score = traj.score_at(inst.reference_time_T)
        (pos if inst.label else neg).append(score)
        trajs.append(traj)

    acc_auroc = auroc(pos, neg)
    acc_auprc = auprc(pos, neg)
    acc_f1 = f1_at_threshold(pos, neg, cfg.alert_threshold_tau)

    rows = []
    for b in cfg.probe_radius_b:
        lcs = [stability_Lc(t, b, cfg.pairing_window_c) for t in trajs]
        flips = [flip_count(t, b, cfg.alert_threshold_tau).flips for t in trajs]
        kept = [r.L_c for r in lcs if not r.degenerate]
        rows.append(
            FoldRow(
                task=task,
                fold=fold,
                b=b,
                auroc=acc_auroc,
                auprc=acc_auprc,
                f1=acc_f1,
                stability=_mean(kept),
                stability_inclusive=_mean([r.L_c for r in lcs]),
                flips=_mean(flips),
                n=len(trajs),
                n_positive=len(pos),
                n_degenerate=len(lcs) - len(kept),
            )
        )
    return rows


SUMMARY_METRICS = ("auroc", "auprc", "f1", "stability", "stability_inclusive", "flips")


@dataclass(frozen=True)
class MetricReport:
    """Per-fold rows plus mean and population standard deviation per probe radius."""

    task: str
    rows: tuple[FoldRow, ...]
    aggregate: Mapping[float, Mapping[str, tuple[float, float]]]
    n_instances: int = 0
    n_positive: int = 0

    @property
    def prevalence(self) -> float:
        return self.n_positive / self.n_instances if self.n_instances else 0.0

    def as_record(self) -> dict:
        return {
            "task": self.task,
            "n_instances": self.n_instances,
            "n_positive": self.n_positive,
            "prevalence": self.prevalence,
            "folds": len({r.fold for r in self.rows}),
            "aggregate": [
                {"b": b, **{m: {"mean": ms[0], "std": ms[1]} for m, ms in metrics.items()}}
                for b, metrics in self.aggregate.items()
            ],
        }


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def aggregate_folds(rows: Sequence[FoldRow]) -> MetricReport:
    if not rows:
        raise ValueError("aggregate_folds needs at least one row")
    by_b: dict[float, list[FoldRow]] = {}
    for row in rows:
        by_b.setdefault(row.b, []).append(row)
    aggregate = {
        b: {m: _mean_std([getattr(r, m) for r in group]) for m in SUMMARY_METRICS}
        for b, group in sorted(by_b.items())
    }
    first_b = min(by_b)
    n = sum(r.n for r in by_b[first_b])
    n_pos = sum(r.n_positive for r in by_b[first_b])
    return MetricReport(rows[0].task, tuple(rows), aggregate, n, n_pos)


def format_table(report: MetricReport) -> str:
    """Aligned plain-text summary: one line per fold row, then mean ± std per radius."""
    header = ["fold", "b", "auroc", "auprc", "f1", "stability", "stab_incl", "flips", "n", "prev"]
    lines = []
    for r in sorted(report.rows, key=lambda r: (r.b, r.fold)):
        lines.append(
            [str(r.fold), f"{r.b:g}", f"{r.auroc:.4f}", f"{r.auprc:.4f}", f"{r.f1:.4f}",
             f"{r.stability:.4f}", f"{r.stability_inclusive:.4f}", f"{r.flips:.4f}", str(r.n), f"{r.prevalence:.4f}"]
        )
    for b, agg in report.aggregate.items():
        lines.append(
            ["mean", f"{b:g}"]
            + [f"{agg[m][0]:.4f}±{agg[m][1]:.4f}" for m in SUMMARY_METRICS]
            + [str(report.n_instances), f"{report.prevalence:.4f}"]
        )
    widths = [max(len(header[i]), *(len(l[i]) for l in lines)) for i in range(len(header))]
    out = [f"task: {report.task}", "  ".join(h.rjust(w) for h, w in zip(header, widths))]
    out += ["  ".join(c.rjust(w) for c, w in zip(l, widths)) for l in lines]
    return "\n".join(out) + "\n"
