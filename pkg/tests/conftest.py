import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from p300auth.synth import generate_session, make_schedule, make_subject_profile, session_seed

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def profile():
    return make_subject_profile(0, 0)


@pytest.fixture(scope="session")
def session(profile):
    return generate_session(profile, make_schedule(session_seed(0, 0, 0)), 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict(request):
    """Print ``criterion N: PASS|FAIL detail`` and fail the test on FAIL."""
    terminal = request.config.pluginmanager.get_plugin("terminalreporter")

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        _VERDICTS[number] = line
        if terminal is not None:
            terminal.write_line("")
            terminal.write_line(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
