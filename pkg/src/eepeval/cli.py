"""Command-line entry point: ``eepeval <subcommand> ...``.

Each pipeline stage is its own subcommand so external model trajectories
can be plugged in at the trajectory-file boundary; ``run`` chains them all.
Options given on the command line override values from ``--config``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .errors import EEPError
from .metrics import aggregate_folds, format_table
from .pipeline import (
    RunConfig,
    evaluate_instances,
    label_cohort,
    prepare,
    read_run_config,
    run_pipeline,
    score_instances,
)
from .sampling import assign_folds, sample_reference_times, with_folds
from .synth import ScorerSpec, SynthConfig, generate_cohort
from .tasks import PRESETS, load_task

log = logging.getLogger("eepeval")

DEFAULTS = {"task": "generic", "seed": "0", "folds": "5", "out": ".", "scorer": "oracle"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with a [run] section")
    p.add_argument("--seed", type=int)
    p.add_argument("--task", help=f"preset ({', '.join(PRESETS)}, generic) or task INI path")
    p.add_argument("--b", type=float, action="append", metavar="HOURS", help="probe radius; repeatable")
    p.add_argument("--tau", type=float, help="alert threshold")
    p.add_argument("--folds", type=int)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eepeval", description="Accuracy and stability evaluation of risk trajectories.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic event file")
    _common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--prevalence", type=float, default=0.1)
    p.add_argument("--mean-duration", type=float, default=12.0)
    p.add_argument("--rate", type=float, default=6.0, help="observations per hour")
    p.add_argument("--lift", type=float, default=1.0, help="biomarker rise before the event")

    for name, text in (("validate", "parse and validate an event file"),
                       ("label", "detect events and write labels"),
                       ("sample", "draw one reference time per episode and assign folds")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("events", type=Path, nargs="?")

    p = sub.add_parser("score", help="score instances with a bundled synthetic scorer")
    _common(p)
    p.add_argument("events", type=Path, nargs="?")
    p.add_argument("--instances", type=Path)
    p.add_argument("--scorer", help="oracle | windowed_mean | noisy:SIGMA | constant:V")

    p = sub.add_parser("evaluate", help="per-fold metric rows from instances and trajectories")
    _common(p)
    p.add_argument("--instances", type=Path)
    p.add_argument("--trajectories", type=Path)

    p = sub.add_parser("report", help="aggregate fold rows into a report")
    _common(p)
    p.add_argument("--rows", type=Path)

    p = sub.add_parser("run", help="full pipeline")
    _common(p)
    p.add_argument("events", type=Path, nargs="?")
    p.add_argument("--scorer")
    p.add_argument("--trajectories", type=Path)
    return parser


def _settings(args) -> dict:
    merged = dict(DEFAULTS)
    if args.config is not None:
        merged.update(read_run_config(args.config))
    for key in ("task", "seed", "folds", "out", "tau", "scorer", "events", "trajectories", "instances", "rows"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = str(value)
    if args.b:
        merged["b"] = ",".join(repr(b) for b in args.b)
    return merged


def _need(s: dict, key: str) -> Path:
    if not s.get(key):
        raise EEPError(f"missing required input: {key}")
    return Path(s[key])


def _run_config(s: dict) -> RunConfig:
    return RunConfig(
        task=s["task"],
        events=_need(s, "events"),
        out=Path(s["out"]),
        seed=int(s["seed"]),
        folds=int(s["folds"]),
        scorer=s["scorer"],
        trajectories=Path(s["trajectories"]) if s.get("trajectories") else None,
        b=tuple(float(x) for x in s["b"].split(",")) if s.get("b") else None,
        tau=float(s["tau"]) if s.get("tau") else None,
    )


def _task(s: dict):
    b = tuple(float(x) for x in s["b"].split(",")) if s.get("b") else None
    tau = float(s["tau"]) if s.get("tau") else None
    return load_task(s["task"]).with_config(probe_radius_b=b, alert_threshold_tau=tau)


def _instances_from_events(s: dict, task, seed: int, folds: int):
    _, cohort = prepare(io.parse_event_file(_need(s, "events")), task)
    instances = sample_reference_times(cohort, task.config.horizon_h, seed)
    return cohort, with_folds(instances, assign_folds(instances, folds, seed))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except EEPError as exc:
        print(f"eepeval {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"eepeval {args.command}: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    s = _settings(args)
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    seed = int(s["seed"])

    if args.command == "synth":
        synth_task = s["task"] if s["task"] in PRESETS else None
        cfg = SynthConfig(args.n, args.prevalence, args.mean_duration, args.rate, args.lift, seed,
                          horizon_h=_task(s).config.horizon_h, task=synth_task)
        episodes = generate_cohort(cfg)
        io.write_event_file(out / "events.jsonl", episodes)
        print(f"wrote {len(episodes)} episodes to {out / 'events.jsonl'}")
        return 0

    if args.command == "validate":
        episodes = io.parse_event_file(_need(s, "events"))
        n_obs = sum(len(ep.observations) for ep in episodes)
        empty = sum(1 for ep in episodes if not ep.observations)
        print(f"{len(episodes)} episodes, {n_obs} observations, {empty} empty: ok")
        return 0

    task = _task(s)
    folds = int(s["folds"])

    if args.command == "label":
        labels, cohort = label_cohort(io.parse_event_file(_need(s, "events")), task)
        io.write_labels(out / "labels.jsonl", labels)
        n_pos = sum(1 for ep in cohort if ep.event_time is not None)
        print(f"{len(labels)} episodes, {len(cohort)} in cohort, {n_pos} positive")
        return 0

    if args.command == "sample":
        _, instances = _instances_from_events(s, task, seed, folds)
        io.write_instances(out / "instances.jsonl", instances)
        print(f"{len(instances)} instances, {sum(i.label for i in instances)} positive")
        return 0

    if args.command == "score":
        spec = ScorerSpec.parse(s["scorer"], horizon_h=task.config.horizon_h, seed=seed)
        if s.get("instances"):
            _, cohort = prepare(io.parse_event_file(_need(s, "events")), task)
            instances = io.read_instances(s["instances"])
        else:
            cohort, instances = _instances_from_events(s, task, seed, folds)
        trajectories = score_instances(io.episodes_by_id(cohort), instances, task, spec)
        io.write_trajectories(out / "trajectories.jsonl", trajectories)
        print(f"scored {len(trajectories)} trajectories with {spec}")
        return 0

    if args.command == "evaluate":
        instances = io.read_instances(_need(s, "instances"))
        trajectories = io.read_trajectories(_need(s, "trajectories"))
        rows = evaluate_instances(instances, trajectories, task)
        io.write_rows(out / "rows.jsonl", rows)
        sys.stdout.write(format_table(aggregate_folds(rows)))
        return 0

    if args.command == "report":
        report = aggregate_folds(io.read_rows(_need(s, "rows")))
        io.write_report(out / "report.json", report)
        (out / "report.txt").write_text(format_table(report), encoding="utf-8")
        sys.stdout.write(format_table(report))
        return 0

    report = run_pipeline(_run_config(s))
    sys.stdout.write(format_table(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
