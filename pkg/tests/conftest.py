import sys

import numpy as np
import pytest

from fracpar.bases import build_eigensystem, operator_spec
from fracpar.fracop import TimeGrid


@pytest.fixture(scope="session")
def dirichlet16():
    return build_eigensystem(operator_spec("interval_dirichlet"), modes=16, grid_size=64)


@pytest.fixture(scope="session")
def neumann16():
    return build_eigensystem(operator_spec("interval_neumann"), modes=16, grid_size=64)


@pytest.fixture(scope="session")
def time32():
    return TimeGrid(32, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    # one pass/fail line per acceptance criterion, whether or not output is captured
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    crit = getattr(mod, "CRITERIA", {})
    if crit:
        terminalreporter.section("acceptance criteria")
        for n in sorted(crit):
            title, ok, detail = crit[n]
            terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
