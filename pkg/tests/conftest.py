import math
from pathlib import Path

import numpy as np
import pytest

from catfix.fixpoint import solve
from catfix.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def polar(rho, phi):
    """Hyperboloid point at distance ``rho`` from the base point, direction ``phi``."""
    return np.array([math.sinh(rho) * math.cos(phi), math.sinh(rho) * math.sin(phi), math.cosh(rho)])


@pytest.fixture(scope="session")
def solved():
    """Solve each bundled scenario once per session: ``{name: (scenario, result)}``."""
    cache = {}

    def get(name):
        if name not in cache:
            sc = load_scenario(SCENARIOS / f"{name}.yaml")
            cache[name] = (sc, solve(sc.space, sc.K, sc.T, sc.config))
        return cache[name]

    return get


ACCEPTANCE: dict = {}


def record(n: int, ok: bool, detail: str):
    """Log one acceptance criterion; the line is echoed now and in the session summary."""
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
