import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from witness_bounds.states import child_rng, random_mixed_state, random_pure_state

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.sampled_from([2, 3, 4, 8])


@st.composite
def pure_states(draw, dim=None):
    d = draw(dims) if dim is None else dim
    return random_pure_state(d, child_rng(draw(seeds), 0))


@st.composite
def mixed_states(draw, dim=None, max_rank=4):
    d = draw(dims) if dim is None else dim
    k = draw(st.integers(1, max_rank))
    return random_mixed_state(d, k, child_rng(draw(seeds), 1), weights="uniform")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
