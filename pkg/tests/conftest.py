import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hotw.limitdist import LimitKernel, ParametrixConfig  # noqa: E402
from hotw.painleve import KernelEvaluator, ModelParams  # noqa: E402


@pytest.fixture(scope="session")
def k0():
    return KernelEvaluator.solve(ModelParams(0))


@pytest.fixture(scope="session")
def k1():
    return KernelEvaluator.solve(ModelParams(1))


@pytest.fixture(scope="session")
def k1_inflected():
    return KernelEvaluator.solve(ModelParams(1, (0.0, -3.0)))


@pytest.fixture(scope="session")
def limit_kernel():
    return LimitKernel.solve(ParametrixConfig(0.25))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
