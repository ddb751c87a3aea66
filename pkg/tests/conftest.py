import numpy as np
import pytest


def synthetic_image(h=48, w=60, seed=0):
    """Smooth texture plus a few hard edges, on the 0..255 scale."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    img = 120 + 40 * np.sin(xx / 3.1 + rng.uniform(0, 6)) * np.cos(yy / 4.3 + rng.uniform(0, 6))
    img += 30 * np.sin((xx + 2 * yy) / 7.0)
    for _ in range(3):
        x0, y0 = rng.integers(0, w), rng.integers(0, h)
        img[(xx - x0) * rng.normal() + (yy - y0) * rng.normal() > 0] += rng.uniform(-50, 50)
    return np.clip(img, 0, 255)


@pytest.fixture
def images():
    return [synthetic_image(seed=s) for s in range(4)]


# criterion number -> one-line verdict, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
