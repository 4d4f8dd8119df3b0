import os

import pytest

ACCEPTANCE_LINES: list[str] = []

# hypothesis runs are kept short; the catalog fixtures dominate runtime
try:
    from hypothesis import HealthCheck, settings

    settings.register_profile(
        "repo", max_examples=int(os.environ.get("HYPERSTAB_EXAMPLES", "40")), deadline=None,
        suppress_health_check=[HealthCheck.too_slow],
    )
    settings.load_profile("repo")
except ImportError:  # pragma: no cover
    pass


@pytest.fixture
def record_acceptance():
    def record(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
