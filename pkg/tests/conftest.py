"""Suite-wide decomposition audit and the acceptance summary."""

from __future__ import annotations

from collections import Counter

import pytest

import boxpoly
import boxpoly.pipeline as pipeline

AUDIT = {"calls": 0, "violations": 0}
ACCEPTANCE: list = []

_original_decompose = pipeline.decompose


def _audited_decompose(p, vminus, vplus):
    dec = _original_decompose(p, vminus, vplus)
    AUDIT["calls"] += 1
    total: Counter = Counter(dec.f_minus.terms)
    for block in dec.blocks:
        total.update(block.objective.terms)
    rebuilt = {m: c for m, c in total.items() if c}
    if rebuilt != dict(p.terms):
        AUDIT["violations"] += 1
    return dec


pipeline.decompose = _audited_decompose
boxpoly.decompose = _audited_decompose


def record_acceptance(number: int, passed: bool, detail: str):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_collection_modifyitems(items):
    last = [it for it in items if it.get_closest_marker("run_last")]
    items[:] = [it for it in items if not it.get_closest_marker("run_last")] + last


def pytest_terminal_summary(terminalreporter):
    terminalreporter.write_sep("-", "decomposition audit")
    terminalreporter.write_line(
        f"{AUDIT['calls']} decompositions checked, {AUDIT['violations']} identity violations")
    if ACCEPTANCE:
        terminalreporter.write_sep("-", "acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)


def pytest_sessionfinish(session, exitstatus):
    if AUDIT["violations"] and session.exitstatus == 0:
        session.exitstatus = 1
