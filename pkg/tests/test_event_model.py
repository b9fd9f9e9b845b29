import math

import pytest
from hypothesis import given, strategies as st

from conftest import episode, lab, num
from eepeval.errors import (
    ConfigError,
    DuplicateEpisodeId,
    EmptyId,
    ModalityMismatch,
    NegativeTimestamp,
    NonFiniteValue,
)
from eepeval.event_model import (
    CodedNumeric,
    Episode,
    Marker,
    Modality,
    Numeric,
    Observation,
    ProbeKind,
    ProbePolicy,
    TaskConfig,
    Text,
    prefix,
    validate_cohort,
    validate_episode,
)

times = st.lists(st.floats(0, 100, allow_nan=False), max_size=40)


def test_validate_sorts_observations():
    ep = episode(num(1, 0.0), num(2, 0.5), num(3, 0.2))
    assert ep.times == (0.0, 0.2, 0.5)
    assert [o.number for o in ep.observations] == [1, 3, 2]


def test_equal_timestamps_keep_input_order():
    ep = episode(lab("a", 1, 1.0), lab("b", 2, 0.0), lab("c", 3, 1.0), lab("d", 4, 1.0))
    assert [o.code for o in ep.observations] == ["b", "a", "c", "d"]


def test_negative_timestamp_names_index():
    with pytest.raises(NegativeTimestamp) as err:
        episode(num(1, 0.0), num(1, -1.0))
    assert err.value.index == 1


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_timestamp(bad):
    with pytest.raises(NonFiniteValue) as err:
        episode(num(1, bad))
    assert err.value.index == 0


def test_non_finite_value():
    with pytest.raises(NonFiniteValue) as err:
        episode(num(1, 0.0), num(1, 1.0), lab("k", math.nan, 2.0))
    assert err.value.index == 2


def test_empty_id():
    with pytest.raises(EmptyId):
        validate_episode(Episode("", ()))


def test_empty_episode_is_flagged():
    ep = validate_episode(Episode("x", ()))
    assert ep.observations == ()
    assert ep.metadata["empty"] == "true"
    assert ep.start is None and ep.end is None


def test_negative_event_time_rejected():
    with pytest.raises(NegativeTimestamp):
        validate_episode(Episode("x", (num(1, 0.0),), event_time=-2.0))


@pytest.mark.parametrize(
    "modality,value",
    [
        (Modality.LAB, Numeric(1.0)),
        (Modality.LAB, Text("k")),
        (Modality.TEXT, Numeric(1.0)),
        (Modality.MEDICATION, Text("abx")),
        (Modality.VITAL, Marker("x")),
    ],
)
def test_value_variant_must_suit_modality(modality, value):
    with pytest.raises(ModalityMismatch):
        validate_episode(Episode("x", (Observation(modality, value, 0.0),)))


def test_coded_numeric_needs_code():
    with pytest.raises(ModalityMismatch):
        validate_episode(Episode("x", (Observation(Modality.LAB, CodedNumeric("", 1.0), 0.0),)))


def test_cohort_ids_unique():
    a = Episode("a", (num(1, 0.0),))
    assert [e.id for e in validate_cohort([a, Episode("b")])] == ["a", "b"]
    with pytest.raises(DuplicateEpisodeId):
        validate_cohort([a, Episode("b"), a])


def test_prefix_boundary_is_closed():
    ep = episode(num(1, 0.0), num(2, 1.0), num(3, 2.0))
    assert [o.t for o in prefix(ep, 1.0)] == [0.0, 1.0]


def test_prefix_before_first_observation():
    assert prefix(episode(num(1, 0.5)), 0.0) == ()


def test_prefix_hundred_points():
    ep = episode(*(num(i, i / 10) for i in range(100)))
    expected = [o for o in ep.observations if o.t <= 4.95]
    assert list(prefix(ep, 4.95)) == expected
    assert len(expected) == 50


@given(times, st.floats(0, 100), st.floats(0, 100))
def test_prefix_is_monotone(ts, a, b):
    ep = episode(*(num(1, t) for t in ts))
    lo, hi = sorted((a, b))
    small, big = prefix(ep, lo), prefix(ep, hi)
    assert big[: len(small)] == small


@given(times, st.floats(0, 100))
def test_prefix_matches_filter(ts, T):
    ep = episode(*(num(i, t) for i, t in enumerate(ts)))
    assert list(prefix(ep, T)) == [o for o in ep.observations if o.t <= T]


@given(times.filter(bool))
def test_prefix_at_last_time_returns_everything(ts):
    ep = episode(*(num(1, t) for t in ts))
    assert prefix(ep, ep.end) == ep.observations


@given(times)
def test_validate_is_idempotent(ts):
    ep = episode(*(num(i, t) for i, t in enumerate(ts)))
    assert validate_episode(ep) == ep


def test_task_config_defaults():
    cfg = TaskConfig(horizon_h=1.5, probe_radius_b=(0.5, 4.0))
    assert cfg.pairing_window_c == pytest.approx(1 / 6)
    assert cfg.alert_threshold_tau == 0.5
    assert cfg.probe_policy.kind is ProbeKind.EVERY_OBSERVATION
    assert TaskConfig(1.0, 2.0).probe_radius_b == (2.0,)


@pytest.mark.parametrize(
    "kw",
    [
        dict(horizon_h=0, probe_radius_b=1),
        dict(horizon_h=1, probe_radius_b=-1),
        dict(horizon_h=1, probe_radius_b=()),
        dict(horizon_h=1, probe_radius_b=0.05, pairing_window_c=0.2),
        dict(horizon_h=1, probe_radius_b=1, alert_threshold_tau=1.0),
        dict(horizon_h=math.inf, probe_radius_b=1),
    ],
)
def test_task_config_rejects(kw):
    with pytest.raises(ConfigError):
        TaskConfig(**kw)


def test_probe_policy_parse_roundtrip():
    grid = ProbePolicy.parse("fixed_grid:0.25")
    assert grid.kind is ProbeKind.FIXED_GRID and grid.step == 0.25
    assert ProbePolicy.parse(str(grid)) == grid
    assert ProbePolicy.parse("every_observation") == ProbePolicy()
    with pytest.raises(ConfigError):
        ProbePolicy.parse("hourly")
    with pytest.raises(ConfigError):
        ProbePolicy.parse("fixed_grid:0")
