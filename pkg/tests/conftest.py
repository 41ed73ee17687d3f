import os
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from pqlimit import build_domain, parse_shape

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True,
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@lru_cache(maxsize=None)
def domain(shape, h):
    return build_domain(parse_shape(shape), h)


@pytest.fixture(scope="session")
def get_domain():
    return domain


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store one acceptance verdict and print it."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
