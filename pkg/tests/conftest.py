from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eepeval import kernels  # noqa: E402
from eepeval.event_model import (  # noqa: E402
    CodedNumeric,
    Episode,
    Marker,
    Modality,
    Numeric,
    Observation,
    validate_episode,
)


def lab(code: str, value: float, t: float) -> Observation:
    return Observation(Modality.LAB, CodedNumeric(code, value), t)


def vital(code: str, value: float, t: float) -> Observation:
    return Observation(Modality.VITAL, CodedNumeric(code, value), t)


def med(code: str, t: float) -> Observation:
    return Observation(Modality.MEDICATION, Marker(code), t)


def proc(code: str, t: float) -> Observation:
    return Observation(Modality.PROCEDURE, Marker(code), t)


def admin(code: str, t: float) -> Observation:
    return Observation(Modality.ADMIN, Marker(code), t)


def num(value: float, t: float, modality: Modality = Modality.VITAL) -> Observation:
    return Observation(modality, Numeric(value), t)


def episode(*obs: Observation, id: str = "e1", event_time=None, **metadata) -> Episode:
    return validate_episode(Episode(id, tuple(obs), event_time, metadata))


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return request.param


# acceptance criteria report: filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
