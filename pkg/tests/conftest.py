"""Shared fixtures and the acceptance-criteria reporter.

Tests marked with @pytest.mark.criterion("Pn") get one PASS/FAIL line each
in the terminal summary, so the acceptance gate is readable at a glance.
"""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from loglens.corpus import LogEntry
from loglens.parsecfg import FeatureDef, ParserConfig, VariableDef

_RESULTS: list[tuple[str, bool, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        marker = item.get_closest_marker("criterion")
        if marker:
            detail = getattr(item, "_criterion_detail", "")
            _RESULTS.append((marker.args[0], rep.passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"{cid}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def criterion_detail(request):
    """Let a test attach a short detail string to its criterion line."""

    def set_detail(text: str) -> None:
        request.node._criterion_detail = text

    return set_detail


def entry(text: str, offset: int = 0, source: str = "mem", ts: str | None = None) -> LogEntry:
    """Handy LogEntry builder for in-memory parser tests."""
    stamp = (
        datetime.strptime(ts, "%Y-%m-%dT%H:%M:%S").replace(tzinfo=timezone.utc) if ts else None
    )
    return LogEntry(raw_text=text, timestamp=stamp, source_id=source, offset=offset)


@pytest.fixture
def port_config() -> ParserConfig:
    """A tiny config with one 'port' variable and two specific features."""
    return ParserConfig(
        variables=[VariableDef("port", r"port = INTEGER: (\d+)")],
        features=[
            FeatureDef("port_80", "port", "literal", "80"),
            FeatureDef("port_53", "port", "literal", "53"),
            FeatureDef("port_default", "port", "default"),
        ],
    )
