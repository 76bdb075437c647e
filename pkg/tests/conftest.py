import numpy as np
import pytest

from boxplus import axioms


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def all_manifolds():
    return [(name, f()) for name, f in axioms.MANIFOLDS.items()]


MANIFOLD_PARAMS = pytest.mark.parametrize("name,m", all_manifolds(), ids=[n for n, _ in all_manifolds()])


# lines reported by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
