import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from padplan.network import load_instance  # noqa: E402
from padplan.scenario import bundled_instance_path  # noqa: E402


@pytest.fixture(scope="session")
def table3_path():
    return Path(str(bundled_instance_path("paper_table3")))


@pytest.fixture(scope="session")
def table3(table3_path):
    return load_instance(table3_path)


@pytest.fixture(scope="session")
def table3_short(table3_path):
    return load_instance(table3_path, horizon=2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
