import numpy as np
import pytest

from laxkit.elliptic import EllipticContext, trigonometric
from laxkit.report import Sampler

# Lines collected by the acceptance tests; printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def ctx():
    return EllipticContext(1j)


@pytest.fixture(params=[1j, 0.7j, 0.5 + 0.8j], ids=["tau=i", "tau=0.7i", "tau=0.5+0.8i"])
def ell_ctx(request):
    return EllipticContext(request.param)


@pytest.fixture
def trig_ctx():
    return trigonometric()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_sampler():
    return Sampler(count=10, seed=3)
