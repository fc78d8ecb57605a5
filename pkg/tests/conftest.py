"""Shared, session-cached end-to-end runs.

Scans are the expensive part (a few seconds per window), so every
verification report and every scan is computed once per session and reused by
the unit tests and the acceptance suite.
"""
from __future__ import annotations

import math

import pytest

from medialgerm.fixtures import fixture
from medialgerm.medial import run_grid_scan
from medialgerm.verify import VerificationConfig, run_verification

ROTATION_DEG = 30.0


class RunCache:
    def __init__(self):
        self._reports = {}
        self._scans = {}

    def curve(self, name: str, rotate_deg: float = 0.0):
        curve = fixture(name)
        return curve.rotated(math.radians(rotate_deg)) if rotate_deg else curve

    def report(self, name: str, rotate_deg: float = 0.0):
        key = (name, rotate_deg)
        if key not in self._reports:
            self._reports[key] = run_verification(self.curve(name, rotate_deg), VerificationConfig(),
                                                  curve_id=f"{name}@{rotate_deg:g}")
        return self._reports[key]

    def scan(self, name: str, window: float | None = None, resolution: int = 512):
        curve = self.curve(name)
        window = curve.epsilon / 2.0 if window is None else window
        key = (name, window, resolution)
        if key not in self._scans:
            self._scans[key] = run_grid_scan(curve, window, resolution)
        return self._scans[key]


_CACHE = RunCache()


@pytest.fixture(scope="session")
def runs() -> RunCache:
    return _CACHE


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
