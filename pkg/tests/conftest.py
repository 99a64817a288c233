from __future__ import annotations

import sys
from pathlib import Path

import pytest

from algapprox import SamplerConfig, make_presentation

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def cfg() -> SamplerConfig:
    return SamplerConfig()


@pytest.fixture(scope="session")
def quadrant():
    return make_presentation(["x", "y", "z"], ["z"], ["x", "y"], 2)


@pytest.fixture(scope="session")
def half_line():
    return make_presentation(["x1", "x2", "x3"], ["x1", "x2"], ["x3"], 1)


@pytest.fixture(scope="session")
def parabola():
    return make_presentation(["x", "y"], ["y - x^2"])


@pytest.fixture(scope="session")
def line():
    return make_presentation(["x", "y"], ["y"])


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
