import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from raster import GenConfig, GridParams, generate  # noqa: E402

ACCEPTANCE_RESULTS = []

SMALL_CANVAS = (-50.0, 50.0, -50.0, 50.0)


@pytest.fixture
def record_acceptance():
    """Record one PASS/FAIL line for the terminal summary."""

    def record(number, name, passed, detail=""):
        ACCEPTANCE_RESULTS.append((number, name, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {name}: {detail}")


@pytest.fixture(scope="session")
def hub_data_100():
    cfg = GenConfig(n_clusters=100, seed=7)
    return generate(cfg)


@pytest.fixture
def unit_params():
    """Precision 0 on a small canvas: tiles are unit squares."""
    return GridParams(precision=0, threshold=1, min_size=1, canvas=SMALL_CANVAS)
