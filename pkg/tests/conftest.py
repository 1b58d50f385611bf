import numpy as np
import pytest

from psharp.raster import Raster
from psharp.validate import make_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def scene():
    return make_synthetic(7, 128, 128)


@pytest.fixture(scope="session")
def scene256():
    return make_synthetic(11, 256, 256)


def smooth_image(rng, bands, h, w, level=100.0):
    """Sum of a few low-frequency sinusoids per band, strictly positive."""
    y, x = np.mgrid[0:h, 0:w].astype(float)
    out = np.empty((bands, h, w))
    for k in range(bands):
        fx, fy = rng.uniform(0.5, 2.0, 2) / max(h, w)
        ph = rng.uniform(0, 2 * np.pi, 2)
        out[k] = level + 10 * np.sin(2 * np.pi * fx * x + ph[0]) + 8 * np.cos(2 * np.pi * fy * y + ph[1])
    return Raster(out)


# criterion id -> (description, pass/fail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        desc, ok = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {desc}")
