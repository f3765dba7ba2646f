import math

import numpy as np
import pytest
from hypothesis import settings

from blindbeam.array import CarrierSpec, make_uca, make_ula
from blindbeam.config import parse_config

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

CARRIER = CarrierSpec()
HALF_WAVE = CARRIER.wavelength / 2

# lines collected by the acceptance module, echoed in the terminal summary
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture
def carrier():
    return CARRIER


@pytest.fixture
def ula8():
    return make_ula(8, HALF_WAVE)


@pytest.fixture
def uca8():
    return make_uca(8, HALF_WAVE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def scenario(**sections):
    """Parsed config from keyword sections, e.g. ``scenario(mc={"trials": 3})``."""
    raw = {k: v for k, v in sections.items() if v is not None}
    return parse_config(raw)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
