from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for ``import oracles``

from hysafe import bundled_path, load_reference  # noqa: E402
from hysafe.cli import main  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        slot = item.config._criteria.setdefault(number, {"title": title, "ok": True, "tests": 0})
        slot["tests"] += 1
        slot["ok"] = slot["ok"] and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crits = getattr(config, "_criteria", {})
    if not crits:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(crits):
        slot = crits[number]
        status = "PASS" if slot["ok"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {slot['title']} ({slot['tests']} checks)")


@pytest.fixture(scope="session")
def reference():
    return load_reference()


@pytest.fixture(scope="session")
def reference_path() -> str:
    return str(bundled_path("reference.hsa"))


@pytest.fixture
def cli(capsys):
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""

    def run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return run
