"""Shared pytest plumbing: the acceptance-criteria summary section.

Tests in ``test_acceptance.py`` register one verdict per shipped
guarantee through :func:`record_criterion`; after the run, every verdict
is printed as one line in a dedicated terminal section so the gate can
be read off directly even when per-test output is captured.
"""

from typing import Dict, Tuple

_CRITERIA: Dict[int, Tuple[str, bool, str]] = {}


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> bool:
    """Store (and return) one acceptance verdict for the summary section."""
    _CRITERIA[number] = (name, passed, detail)
    return passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, passed, detail = _CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"criterion {number:2d} {name:<28s} {status}{suffix}")
