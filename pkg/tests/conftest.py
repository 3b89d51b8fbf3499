import numpy as np
import pytest

from borchers import MatrixTestFunction, SampledSpace

# lines printed by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def random_function(space, k, rng, hermitian=False):
    vals = rng.standard_normal((space.size, k, k)) + 1j * rng.standard_normal((space.size, k, k))
    if hermitian:
        vals = vals + np.conj(np.swapaxes(vals, 1, 2))
    return MatrixTestFunction(space, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid4():
    return SampledSpace.uniform_lattice(4)


@pytest.fixture
def grid3():
    return SampledSpace.uniform_lattice(3)
