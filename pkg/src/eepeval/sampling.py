"""Evaluation-set construction: one reference time per episode.

Positives get ``T`` uniform on ``[t_E - h, t_E)`` so the event lands in
``(T, T + h]``. Negatives get ``T`` drawn so that their elapsed history
``T - t_1`` follows the positives' distribution, using decile bins of the
positive elapsed histories.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import EmptyInput, InsufficientSupport, TooFewPositives
from .event_model import Episode
from .labeling import label_at

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalInstance:
    episode_id: str
    reference_time_T: float
    label: int
    elapsed_history: float
    fold: int | None = None

    def as_record(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "T_hours": self.reference_time_T,
            "label": self.label,
            "elapsed_history": self.elapsed_history,
            "fold": self.fold,
        }

    @classmethod
    def from_record(cls, rec) -> "EvalInstance":
        fold = rec.get("fold")
        return cls(
            str(rec["episode_id"]),
            float(rec["T_hours"]),
            int(rec["label"]),
            float(rec["elapsed_history"]),
            None if fold is None else int(fold),
        )


def truncate_horizon(cohort: Sequence[Episode], h: float) -> list[Episode]:
    """Drop each episode's final ``h`` hours and remove too-early or emptied episodes.

    Positives whose event occurs within the first ``h`` hours since the episode
    start are removed, as are episodes left with no observations.
    """
    out = []
    for ep in cohort:
        if not ep.observations:
            continue
        start = ep.start
        if ep.event_time is not None and ep.event_time - start <= h:
            continue
        cutoff = ep.end - h
        kept = tuple(o for o in ep.observations if o.t <= cutoff)
        if not kept:
            continue
        out.append(replace(ep, observations=kept))
    return out


def ks_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise EmptyInput("ks_distance needs two non-empty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


@dataclass(frozen=True)
class ElapsedBins:
    """Bins over positive elapsed histories and the fraction of positives in each."""

    lows: np.ndarray
    highs: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_sample(cls, values: Sequence[float], n_bins: int = 10) -> "ElapsedBins":
        values = np.asarray(values, dtype=np.float64)
        edges = np.unique(np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1)))
        if edges.size == 1:
            return cls(edges.copy(), edges.copy(), np.ones(1))
        idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, edges.size - 2)
        counts = np.bincount(idx, minlength=edges.size - 1).astype(np.float64)
        return cls(edges[:-1], edges[1:], counts / counts.sum())

    def bin_of(self, value: float) -> int:
        if self.lows.size == 1:
            return 0
        i = int(np.searchsorted(self.highs, value, side="right"))
        return min(i, self.lows.size - 1)


def _apportion(weights: np.ndarray, total: int) -> np.ndarray:
    # largest-remainder rounding; ties broken by bin order
    raw = weights * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    if short:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def sample_reference_times(cohort: Sequence[Episode], h: float, seed: int) -> list[EvalInstance]:
    """Draw exactly one reference time per episode.

    Output order follows the cohort order. Episodes whose feasible positive
    window is empty (event at the first observation) are skipped with a
    warning.
    """
    rng = np.random.default_rng(seed)
    positives: list[tuple[int, Episode]] = []
    negatives: list[tuple[int, Episode]] = []
    for i, ep in enumerate(cohort):
        if not ep.observations:
            continue
        (positives if ep.event_time is not None else negatives).append((i, ep))

    result: dict[int, EvalInstance] = {}
    for i, ep in positives:
        t1 = ep.start
        lo = max(ep.event_time - h, t1)
        if lo >= ep.event_time:
            log.warning("episode %s: no reference time precedes the event; skipped", ep.id)
            continue
        T = float(rng.uniform(lo, ep.event_time))
        if not label_at(ep.event_time, T, h):
            # T + h rounded just below t_E at the window's left edge
            T = 0.5 * (lo + ep.event_time)
        result[i] = EvalInstance(ep.id, T, label_at(ep.event_time, T, h), T - t1)

    pos_elapsed = [inst.elapsed_history for inst in result.values()]
    if negatives and not pos_elapsed:
        # nothing to match against; spread negatives over their own span
        for i, ep in negatives:
            T = float(rng.uniform(ep.start, ep.end)) if ep.end > ep.start else ep.start
            result[i] = EvalInstance(ep.id, T, 0, T - ep.start)
    elif negatives:
        bins = ElapsedBins.from_sample(pos_elapsed)
        short = [ep.id for _, ep in negatives if ep.end - ep.start < bins.lows[0]]
        if short:
            log.warning("%d negatives too short to match any elapsed-history bin; skipped", len(short))
            negatives = [(i, ep) for i, ep in negatives if ep.end - ep.start >= bins.lows[0]]
        targets = _apportion(bins.weights, len(negatives))
        reach = np.array([ep.end - ep.start for _, ep in negatives])
        unassigned = np.ones(len(negatives), dtype=bool)
        assignment = np.full(len(negatives), -1)
        # highest bin first: its eligible pool is a subset of every lower bin's pool
        for j in range(bins.lows.size - 1, -1, -1):
            pool = np.flatnonzero(unassigned & (reach >= bins.lows[j]))
            need = int(targets[j])
            if pool.size < need:
                raise InsufficientSupport(j, float(bins.lows[j]), float(bins.highs[j]), need, int(pool.size))
            chosen = rng.choice(pool, size=need, replace=False) if need else pool[:0]
            assignment[chosen] = j
            unassigned[chosen] = False
        for k, (i, ep) in enumerate(negatives):
            j = assignment[k]
            lo = float(bins.lows[j])
            hi = min(float(bins.highs[j]), float(reach[k]))
            elapsed = float(rng.uniform(lo, hi)) if hi > lo else lo
            T = ep.start + elapsed
            result[i] = EvalInstance(ep.id, T, label_at(ep.event_time, T, h), T - ep.start)
    return [result[i] for i in sorted(result)]


def naive_reference_times(cohort: Sequence[Episode], h: float, seed: int) -> list[EvalInstance]:
    """Unmatched baseline: negatives draw ``T`` uniformly over their own span."""
    rng = np.random.default_rng(seed)
    out = []
    for ep in cohort:
        if not ep.observations:
            continue
        t1 = ep.start
        if ep.event_time is not None:
            lo = max(ep.event_time - h, t1)
            if lo >= ep.event_time:
                continue
            T = float(rng.uniform(lo, ep.event_time))
        else:
            T = float(rng.uniform(t1, ep.end)) if ep.end > t1 else t1
        out.append(EvalInstance(ep.id, T, label_at(ep.event_time, T, h), T - t1))
    return out


def assign_folds(instances: Sequence[EvalInstance], k: int, seed: int) -> dict[str, int]:
    """Stratified random partition of episode ids into ``k`` folds.

    Positives are shuffled and dealt round-robin, and negatives continue the
    deal where the positives stopped, so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not instances:
        raise EmptyInput("no instances to split")
    pos = [inst.episode_id for inst in instances if inst.label]
    neg = [inst.episode_id for inst in instances if not inst.label]
    if len(pos) < k:
        raise TooFewPositives(f"{len(pos)} positives cannot cover {k} folds")
    rng = np.random.default_rng(seed)
    folds: dict[str, int] = {}
    slot = 0
    for ids in (pos, neg):
        for idx in rng.permutation(len(ids)):
            folds[ids[idx]] = slot % k
            slot += 1
    return folds


def with_folds(instances: Sequence[EvalInstance], folds: dict[str, int]) -> list[EvalInstance]:
    return [replace(inst, fold=folds[inst.episode_id]) for inst in instances]
