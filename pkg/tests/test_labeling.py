import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import admin, episode, lab, med, num, proc, vital
from eepeval import labeling as lb
from eepeval.errors import ConfigError, MissingVitals
from eepeval.event_model import Modality

K = "LOINC/6298-4"
hyperk = lb.ThresholdRule("hyperkalemia", {K}, "above", 7.0)
hypog = lb.ThresholdRule("hypoglycemia", {"LOINC/14749-6"}, "below", 3.0)


@pytest.mark.parametrize("event_time,T,h,y", [(2.0, 1.0, 1.5, 1), (1.0, 1.0, 1.5, 0), (2.5, 1.0, 1.5, 1),
                                              (2.5000001, 1.0, 1.5, 0), (None, 1.0, 1.5, 0), (0.5, 1.0, 1.5, 0)])
def test_label_at(event_time, T, h, y):
    assert lb.label_at(event_time, T, h) == y


@given(st.floats(0, 50), st.floats(0, 50), st.floats(0.01, 10), st.floats(0.01, 10))
def test_label_monotone_in_horizon(e, T, h1, h2):
    lo, hi = sorted((h1, h2))
    assert lb.label_at(e, T, lo) <= lb.label_at(e, T, hi)


def test_potassium_first_crossing():
    ep = episode(lab(K, 7.2, 3.0), lab(K, 7.5, 5.0), lab(K, 6.0, 1.0))
    assert lb.detect_threshold_event(ep, hyperk) == 3.0


def test_threshold_is_strict():
    ep = episode(lab(K, 6.9, 1), lab(K, 7.0, 2), lab(K, 7.1, 3))
    assert lb.detect_threshold_event(ep, hyperk) == 3


def test_glucose_never_below():
    ep = episode(*(lab("LOINC/14749-6", 3.0 + i / 10, i) for i in range(10)))
    assert lb.detect_threshold_event(ep, hypog) is None


def test_threshold_ignores_other_codes_and_modalities():
    ep = episode(lab("sodium", 150, 1.0), vital(K, 9.0, 2.0), lab(K, 8.0, 4.0))
    assert lb.detect_threshold_event(ep, hyperk) == 4.0


def test_rule_validation():
    with pytest.raises(ConfigError):
        lb.ThresholdRule("x", set(), "above", 1.0)
    with pytest.raises(ConfigError):
        lb.ThresholdRule("x", {"a"}, "above", float("inf"))
    with pytest.raises(ValueError):
        lb.ThresholdRule("x", {"a"}, "sideways", 1.0)


lab_events = st.lists(
    st.tuples(st.sampled_from([K, "LOINC/2823-3", "other"]), st.floats(5, 9), st.floats(0, 100)), max_size=200
)


@settings(max_examples=200)
@given(lab_events, st.sampled_from(["above", "below"]), st.floats(5, 9))
def test_threshold_matches_exhaustive_scan(events, direction, thr):
    rule = lb.ThresholdRule("r", {K, "LOINC/2823-3"}, direction, thr)
    ep = episode(*(lab(c, v, t) for c, v, t in events))
    fire = (lambda v: v > thr) if direction == "above" else (lambda v: v < thr)
    hits = [t for c, v, t in events if c in rule.code_set and fire(v)]
    assert lb.detect_threshold_event(ep, rule) == (min(hits) if hits else None)


def test_decompensation_onset():
    ep = episode(vital(lb.HEART_RATE, 80, 0.0), vital(lb.HEART_RATE, 112, 0.5))
    assert lb.detect_decompensation_onset(ep) == lb.DecompensationOutcome(0.5, True)


def test_decompensation_abnormal_first_reading():
    ep = episode(vital(lb.HEART_RATE, 120, 0.0), vital(lb.HEART_RATE, 80, 1.0))
    out = lb.detect_decompensation_onset(ep)
    assert not out.in_cohort and out.onset is None


def test_decompensation_abnormal_first_of_later_vital():
    ep = episode(vital(lb.HEART_RATE, 80, 0.0), vital(lb.SPO2, 85, 2.0), vital(lb.SYSTOLIC_BP, 80, 3.0))
    assert not lb.detect_decompensation_onset(ep).in_cohort


def test_decompensation_all_normal():
    ep = episode(vital(lb.HEART_RATE, 80, 0), vital(lb.SYSTOLIC_BP, 120, 0), vital(lb.SPO2, 97, 1))
    assert lb.detect_decompensation_onset(ep) == lb.DecompensationOutcome(None, True)


def test_decompensation_hypotension_and_threshold_equality():
    ep = episode(vital(lb.SYSTOLIC_BP, 120, 0), vital(lb.SYSTOLIC_BP, 90, 1), vital(lb.SYSTOLIC_BP, 89, 2))
    assert lb.detect_decompensation_onset(ep).onset == 2


def test_decompensation_no_vitals():
    with pytest.raises(MissingVitals):
        lb.detect_decompensation_onset(episode(lab(K, 5, 0)))


def test_generic_marker():
    assert lb.generic_event_label(episode(num(1, 0), admin(lb.ICU_TRANSFER, 5.0)), lb.ICU_TRANSFER) == 5.0
    assert lb.generic_event_label(episode(num(1, 0)), lb.ICU_TRANSFER) is None
    assert lb.generic_event_label(episode(admin(lb.DEATH, 9), admin(lb.DEATH, 7)), lb.DEATH) == 7


def test_generic_ignores_coded_numeric_with_same_code():
    ep = episode(lab(lb.DEATH, 1.0, 2.0), admin(lb.DEATH, 4.0))
    assert lb.generic_event_label(ep, lb.DEATH) == 4.0


# --- sepsis cohort -----------------------------------------------------------

def temp(v, t):
    return vital(lb.TEMPERATURE, v, t)


def hr(v, t):
    return vital(lb.HEART_RATE, v, t)


def test_sepsis_cohort_included():
    d = lb.sepsis_cohort_filter(episode(temp(39.0, 2), hr(95, 3)))
    assert d.included
    assert d.criteria_trace == (("temperature", 2), ("heart_rate", 3))


def test_sepsis_cohort_normal_temperature():
    assert not lb.sepsis_cohort_filter(episode(*(temp(37.0, t) for t in range(30)), hr(120, 1)))


def test_sepsis_cohort_pairing_window():
    ep = episode(temp(35.5, 2), hr(95, 20), vital(lb.RESP_RATE, 16, 3), lab(lb.WBC, 8, 3))
    assert not lb.sepsis_cohort_filter(ep)


def test_sepsis_cohort_pairing_boundary():
    assert lb.sepsis_cohort_filter(episode(temp(35.5, 2), hr(95, 14)))
    assert not lb.sepsis_cohort_filter(episode(temp(35.5, 2), hr(95, 14.01)))


def test_sepsis_cohort_late_temperature():
    assert not lb.sepsis_cohort_filter(episode(num(0, 0), temp(39.5, 24.5), hr(95, 24.5)))


@pytest.mark.parametrize("wbc,ok", [(12.5, True), (3.5, True), (12.0, False), (8.0, False)])
def test_sepsis_cohort_wbc(wbc, ok):
    assert bool(lb.sepsis_cohort_filter(episode(temp(39.0, 1), lab(lb.WBC, wbc, 2)))) is ok


def test_sepsis_cohort_prior_antibiotics():
    assert not lb.sepsis_cohort_filter(episode(med(lb.ANTIBIOTIC_IV, 1.0), temp(39.0, 2), hr(95, 3)))
    # exactly at the first criterion time also excludes
    assert not lb.sepsis_cohort_filter(episode(temp(39.0, 2), med(lb.ANTIBIOTIC_IV, 2.0), hr(95, 3)))
    assert lb.sepsis_cohort_filter(episode(temp(39.0, 2), hr(95, 3), med(lb.ANTIBIOTIC_IV, 2.5)))


def test_sepsis_cohort_admission_source():
    ep = episode(temp(39.0, 2), hr(95, 3), admission_source="ward")
    assert not lb.sepsis_cohort_filter(ep)
    assert lb.sepsis_cohort_filter(episode(temp(39.0, 2), hr(95, 3), admission_source="ED"))


# --- eSOFA -------------------------------------------------------------------

def culture(t):
    return proc(lb.BLOOD_CULTURE, t)


def doses(start, stop, every=12.0):
    out, t = [], start
    while t <= stop + 1e-9:
        out.append(med(lb.ANTIBIOTIC_IV, t))
        t += every
    return out


def names(outcome):
    return {n for n, _ in outcome.criteria_trace}


def test_esofa_positive_example():
    out = lb.esofa_sepsis_label(episode(culture(48), *doses(36, 120), lab(lb.LACTATE, 2.5, 60)))
    assert out.positive
    assert {"blood_culture", "qad", "lactate"} <= names(out)
    assert out.event_time == 60


def test_esofa_without_culture():
    out = lb.esofa_sepsis_label(episode(*doses(36, 120), lab(lb.LACTATE, 2.5, 60)))
    assert not out.positive and out.criteria_trace == ()


def test_esofa_short_coverage():
    out = lb.esofa_sepsis_label(episode(culture(48), *doses(36, 60), lab(lb.LACTATE, 2.5, 60)))
    assert not out.positive
    assert "qad" not in names(out)


def test_antibiotic_chains_split_on_gap():
    assert lb.antibiotic_chains([0, 24, 48.5, 60, 0.5], 24) == [(0, 0.5, 24), (48.5, 60)]


ESOFA_CODES = [lb.BLOOD_CULTURE, lb.ANTIBIOTIC_IV, lb.LACTATE, lb.CREATININE, lb.VASOPRESSOR]
noise = st.lists(
    st.tuples(st.sampled_from(["sodium", "glucose", "note"]), st.floats(0, 10), st.floats(0, 200)), max_size=30
)


@settings(max_examples=100)
@given(noise)
def test_esofa_invariant_to_unrelated_observations(extra):
    base = [culture(48), *doses(36, 120), lab(lb.LACTATE, 2.5, 60), lab(lb.CREATININE, 1.0, 0)]
    ref = lb.esofa_sepsis_label(episode(*base))
    noisy = episode(*base, *(lab(c, v, t) for c, v, t in extra))
    assert lb.esofa_sepsis_label(noisy) == ref


@settings(max_examples=200)
@given(
    st.lists(st.floats(0, 150), max_size=3),
    st.lists(st.floats(0, 150), max_size=12).map(lambda xs: xs + [x + 10 * k for x in xs[:1] for k in range(1, 9)]),
    st.lists(st.tuples(st.floats(0.5, 4), st.floats(0, 150)), max_size=4),
)
def test_esofa_positive_trace_covers_three_groups(cultures, abx, lactates):
    ep = episode(*(culture(t) for t in cultures), *(med(lb.ANTIBIOTIC_IV, t) for t in abx),
                 *(lab(lb.LACTATE, v, t) for v, t in lactates))
    out = lb.esofa_sepsis_label(ep)
    if out.positive:
        got = names(out)
        assert "blood_culture" in got and "qad" in got
        assert got & {"vasopressor", "mechanical_ventilation", "creatinine", "bilirubin", "platelets", "lactate"}
    assert out.event_time == oracles.esofa_onset(cultures, abx, lactates)
