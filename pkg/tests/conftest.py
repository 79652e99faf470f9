import numpy as np
import pytest
from hypothesis import assume, strategies as st

from nonlocal_meter.qstate import SpinAxis

ACCEPTANCE_LINES: list[str] = []


def random_state(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_axis(rng: np.random.Generator) -> SpinAxis:
    return SpinAxis.from_vector(rng.normal(size=3))


@st.composite
def unit_vectors(draw, dim: int = 4):
    parts = draw(st.lists(st.floats(-1, 1, allow_nan=False, allow_infinity=False), min_size=2 * dim, max_size=2 * dim))
    v = np.array(parts[:dim]) + 1j * np.array(parts[dim:])
    norm = np.linalg.norm(v)
    assume(norm > 1e-3)
    return v / norm


@st.composite
def axes(draw):
    v = np.array(draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3)))
    assume(np.linalg.norm(v) > 1e-3)
    return SpinAxis.from_vector(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20181018)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
