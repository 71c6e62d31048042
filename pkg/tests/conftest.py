import numpy as np
import pytest

from radarseg.config import PipelineConfig
from radarseg.synth import paper_scenario, synth_cube

_ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Record a pass/fail line for the acceptance summary."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])


@pytest.fixture(scope="session")
def default_cfg():
    return PipelineConfig()


@pytest.fixture(scope="session")
def walk_cube():
    """Reference walk-sit-stand cube and its ground truth."""
    return synth_cube(paper_scenario(), seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
