import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from nvespin.spincore import NucleusSpec, SpinSystem  # noqa: E402


@pytest.fixture
def nv14():
    return SpinSystem.nv([NucleusSpec.nitrogen14()])


@pytest.fixture
def nv_bare():
    return SpinSystem.nv()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
