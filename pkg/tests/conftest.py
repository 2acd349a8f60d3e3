import numpy as np
import pytest

from cshsim.spectral import TorusGrid


def nyquist_free_field(grid, rng, real=False):
    """Random field with the unpaired Nyquist row and column removed."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    values = grid.ifft(c * grid.nyquist_free)
    return values.real if real else values


def band_field(grid, rng, kmax=3, real=False):
    m1, m2 = grid.modes
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * ((m1**2 + m2**2) <= kmax**2)
    values = grid.ifft(c)
    return values.real if real else values


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid16():
    return TorusGrid(16)


@pytest.fixture
def grid32():
    return TorusGrid(32)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
