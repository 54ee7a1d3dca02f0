import numpy as np
import pytest
from hypothesis import settings

from uai.sample import EmpiricalDistribution
from uai.utility import Exponential, IteratedExponential, Linear, ModifiedExponential, PowerLike

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

# families the index can be built from
REGULAR = [
    Exponential(),
    PowerLike(1.0, 2.0),
    PowerLike(0.5, 3.0),
    ModifiedExponential(),
    IteratedExponential(),
]
ALL_FAMILIES = REGULAR + [Linear()]

ACCEPTANCE_LINES = []


def random_law(rng, lo=-10.0, hi=10.0, max_size=64):
    n = int(rng.integers(1, max_size + 1))
    return EmpiricalDistribution(rng.uniform(lo, hi, n), rng.dirichlet(np.ones(n)))


def random_gamma(rng, lo=-2.0, hi=2.0):
    return float(10.0 ** rng.uniform(lo, hi))


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
