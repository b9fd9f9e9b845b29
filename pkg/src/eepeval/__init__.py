"""Evaluation toolkit for early event prediction on irregular event streams."""

from .errors import EEPError
from .event_model import (
    CodedNumeric,
    Episode,
    Marker,
    Modality,
    Numeric,
    Observation,
    ProbePolicy,
    TaskConfig,
    Text,
    prefix,
    validate_episode,
)
from .kernels import BACKEND
from .metrics import (
    RiskTrajectory,
    aggregate_folds,
    auprc,
    auroc,
    evaluate_fold,
    f1_at_threshold,
    flip_count,
    stability_Lc,
)
from .pipeline import RunConfig, run_pipeline
from .sampling import EvalInstance, assign_folds, ks_distance, sample_reference_times, truncate_horizon
from .synth import ScorerSpec, SynthConfig, generate_cohort, score_trajectory
from .tasks import Task, load_task

__version__ = "0.1.0"
