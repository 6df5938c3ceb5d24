from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from qepnarrate.plan import load_schema
from qepnarrate.poem import default_store

DATA = Path(__file__).resolve().parents[1] / "src" / "qepnarrate" / "data"
PLANS = DATA / "plans"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def store():
    return default_store()


@pytest.fixture(scope="session")
def schema():
    return load_schema(DATA / "schema_toy.json")


@pytest.fixture(scope="session")
def plans_dir():
    return PLANS


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        request.config.stash[_VERDICTS].append(line)
        print(line)
        assert ok, line
    return record
