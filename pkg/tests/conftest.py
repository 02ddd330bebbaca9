import numpy as np
import pytest

from mfelab.functional import Weights
from mfelab.torus import Field, Grid


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def ones64(grid64):
    return Weights.constant(grid64)


def smooth_field(grid, rng, modes=3, amp=1.0):
    """Random mean-zero trigonometric polynomial with |k| <= modes."""
    X, Y = grid.nodes()
    u = np.zeros_like(X)
    for kx in range(-modes, modes + 1):
        for ky in range(0, modes + 1):
            if (kx, ky) == (0, 0):
                continue
            a, b = rng.standard_normal(2) * amp / (1 + kx * kx + ky * ky)
            ph = 2 * np.pi * (kx * X + ky * Y)
            u += a * np.cos(ph) + b * np.sin(ph)
    return Field(grid, u).centered()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
