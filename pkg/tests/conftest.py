import numpy as np
import pytest

from fringelab.core import DEFAULT_PITCH_MM, RgbImage, ScalarField


def smooth_dome(n=480, depth_mm=90.0, radius=0.4):
    """(1 - r^2)^3 dome centred in an n x n frame, zero outside ``radius * n``."""
    y, x = np.mgrid[0:n, 0:n] + 0.5
    r2 = ((x - n / 2) ** 2 + (y - n / 2) ** 2) / (radius * n) ** 2
    return ScalarField(depth_mm * np.clip(1.0 - r2, 0.0, None) ** 3, DEFAULT_PITCH_MM)


def blob_texture(n=480, seed=0):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:n, 0:n] + 0.5
    tex = np.full((n, n, 3), 0.5)
    for _ in range(6):
        cx, cy = rng.uniform(0.25 * n, 0.75 * n, 2)
        s = rng.uniform(0.05, 0.1) * n
        tex += rng.uniform(-0.1, 0.1, 3) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s))[:, :, None]
    return RgbImage.clipped(tex)


@pytest.fixture
def dome():
    return smooth_dome()


@pytest.fixture
def texture():
    return blob_texture()


# verdict lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
