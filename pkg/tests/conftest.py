import numpy as np
import pytest

from kgl.dyadic import build_bump_pair
from kgl.grid import SpectralField, VelocityGrid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_acceptance():
    def _record(number: int, name: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        line = f"acceptance {number:2d} [{name}] {status} {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid1d():
    return VelocityGrid(dimension=1, points_per_axis=1024, half_width=16.0)


@pytest.fixture(scope="session")
def grid1d_small():
    return VelocityGrid(dimension=1, points_per_axis=256, half_width=8.0)


@pytest.fixture(scope="session")
def bump_pair():
    return build_bump_pair()


@pytest.fixture(scope="session")
def gaussian_half(grid1d):
    """exp(-v^2/2) on the session grid."""
    v = grid1d.v_meshes[0]
    return SpectralField.from_samples(grid1d, np.exp(-(v**2) / 2.0))


def random_band_limited(grid, rng, band=0.4):
    amp = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    amp[grid.eta_abs > band * grid.nyquist] = 0.0
    samples = np.fft.ifftn(amp, norm="ortho").real
    return SpectralField.from_samples(grid, samples)
