import math

import pytest

from retrainlab import NoiseSpec, ProblemSpec, Uniform

ACCEPTANCE_LINES = []


@pytest.fixture
def illustration_spec():
    """d = 50, gamma^2 = 0.5, Sigma = I - e1 e1^T, u ~ Unif[0, 4], balanced classes."""
    return ProblemSpec(50, math.sqrt(0.5), Uniform(0.0, 4.0))


@pytest.fixture
def noise04():
    return NoiseSpec.flip(0.4)


@pytest.fixture
def record_criterion():
    def record(number, name, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
