import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
DATA = HERE / "data"
sys.path.insert(0, str(HERE / "oracles"))


def _load(name):
    return json.loads((DATA / name).read_text())


@pytest.fixture(scope="session")
def bessel_rows():
    return _load("bessel_oracle.json")["rows"]


@pytest.fixture(scope="session")
def xi_rows():
    return _load("xi_oracle.json")["rows"]


@pytest.fixture(scope="session")
def xi_far_rows():
    return _load("xi_oracle_far.json")["rows"]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
