import numpy as np
import pytest

from ptigp import twolevel as tl
from ptigp.gaugemap import proper_map_along
from ptigp.paths import latitude_loop
from ptigp.ptsystem import spectrum_along

ACCEPTANCE_THETAS = (0.3, np.pi / 2, 2.5)


@pytest.fixture(scope="session")
def pt_system():
    return tl.system()


@pytest.fixture(scope="session")
def spin_system():
    return tl.system(b=0.0)


class LoopData:
    def __init__(self, system, theta, samples):
        self.system = system
        self.theta = theta
        self.path = latitude_loop(theta, samples)
        self.spectra = spectrum_along(system, self.path)
        self._proper = None

    @property
    def proper(self):
        if self._proper is None:
            self._proper = proper_map_along(self.system, self.path)
        return self._proper


@pytest.fixture(scope="session")
def loops(pt_system):
    """4000-interval latitude loops of the a=3, b=sqrt(5) model, keyed by theta."""
    cache = {}

    def get(theta, samples=4000):
        key = (float(theta), samples)
        if key not in cache:
            cache[key] = LoopData(pt_system, theta, samples)
        return cache[key]

    return get


def angle_diff(a, b):
    """Distance between two angles modulo 2 pi."""
    d = np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


ACCEPTANCE_LINES = []


def record(label, passed, detail):
    """Print and remember one acceptance sub-check."""
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
