import numpy as np
import pytest

from gsqg.spectral import Grid, PhysicalField, SpectralField, to_spectral


def random_smooth(grid: Grid, seed: int = 0, k0: float = 4.0, mean_free: bool = True) -> SpectralField:
    """Band-limited random field with a Gaussian spectrum."""
    rng = np.random.default_rng(seed)
    c = to_spectral(PhysicalField(grid, rng.standard_normal(grid.shape))).coeffs
    c = c * np.exp(-(grid.kabs / k0) ** 2)
    c = np.where(grid.dealias_mask, c, 0.0)
    if mean_free:
        c[0, 0] = 0.0
    return SpectralField(grid, c)


def random_rough(grid: Grid, seed: int = 0) -> SpectralField:
    """Random field with every mode populated (white noise, Hermitian by construction)."""
    rng = np.random.default_rng(seed)
    return to_spectral(PhysicalField(grid, rng.standard_normal(grid.shape)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
