import json
from pathlib import Path

import pytest

ORACLE_FILE = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def frozen():
    """Reference values written by ``oracles/gen_oracles.py``."""
    return json.loads(ORACLE_FILE.read_text())


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
