import sys
from pathlib import Path

import numpy as np
import pytest

# make tests/oracles.py importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))

CORPUS = Path(__file__).parent / "corpus"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- one summary line per acceptance criterion ----------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.failed or report.when == "call":
        prev = _criteria.get(number, (title, "PASS", 0.0))
        status = "FAIL" if report.failed or prev[1] == "FAIL" else "PASS"
        _criteria[number] = (title, status, prev[2] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, seconds = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}  ({seconds:.1f} s)")
