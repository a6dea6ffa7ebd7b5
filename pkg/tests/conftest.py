import sys
import numpy as np
import pytest

from radonalias.grids import ImageGrid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def gaussian():
    """Centered Gaussian of width 0.1 on a 128 grid over [-1, 1]^2."""
    sigma = 0.1
    return ImageGrid.from_function(128, 1.0, lambda x, y: np.exp(-(x * x + y * y) / (2 * sigma ** 2))), sigma


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "LINES", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[num])
