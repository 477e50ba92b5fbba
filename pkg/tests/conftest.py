import functools

import numpy as np
import pytest
from hypothesis import settings

from distobs.engine import integrate, reference_scenario

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_CRITERIA = []


@functools.lru_cache(maxsize=None)
def reference_run(seed=0, dt=1e-4, t_final=20.0, kind="output_based"):
    """Reference-scenario traces shared across test modules (each costs ~20 s)."""
    return integrate(reference_scenario(seed=seed, dt=dt, t_final=t_final), kind)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail=""):
        _CRITERIA.append((number, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number:>2}. {title}  {detail}")
