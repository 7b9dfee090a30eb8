import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one acceptance line; all lines are echoed in the terminal summary."""

    def _report(criterion: int, ok: bool, detail: str) -> None:
        line = f"[criterion {criterion:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


@st.composite
def spike_trains(draw, max_b=6, max_c=8, max_t=8, channels=None, batch=None, window=None):
    b = batch if batch is not None else draw(st.integers(1, max_b))
    c = channels if channels is not None else draw(st.integers(1, max_c))
    t = window if window is not None else draw(st.integers(1, max_t))
    return draw(arrays(np.uint8, (b, c, t), elements=st.integers(0, 1)))


@st.composite
def pre_post_pair(draw, max_b=6, max_c=8, max_t=8):
    b = draw(st.integers(1, max_b))
    t = draw(st.integers(1, max_t))
    pre = draw(spike_trains(batch=b, window=t, max_c=max_c))
    post = draw(spike_trains(batch=b, window=t, max_c=max_c))
    return pre, post
