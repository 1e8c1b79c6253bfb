import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def record_criterion():
    """Store the one-line outcome of an acceptance criterion."""
    def record(label, passed: bool, detail: str) -> str:
        line = f"criterion {label}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[str(label)] = line
        print(line)
        return line
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
