import os

import numpy as np
import pytest
from hypothesis import settings

from decowave.basis import ChainSpec
from decowave.eigensolve import lanczos_ground_state
from decowave.operators import StateVector

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

LARGE = os.environ.get("DECOWAVE_LARGE") == "1"


def random_state(chain, rng, sector=None):
    dim = chain.dimension if sector is None else sector.size
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(chain, v / np.linalg.norm(v), sector)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ground_states():
    """Lazily computed ground states keyed by (N, delta)."""
    cache = {}

    def get(n, delta=0.0):
        if (n, delta) not in cache:
            cache[(n, delta)] = lanczos_ground_state(ChainSpec(n, 1.0, delta))
        return cache[(n, delta)]

    return get


def pytest_collection_modifyitems(config, items):
    if LARGE:
        return
    skip = pytest.mark.skip(reason="N = 28 runs need DECOWAVE_LARGE=1 and tens of GB of memory")
    for item in items:
        if "large" in item.keywords:
            item.add_marker(skip)


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
