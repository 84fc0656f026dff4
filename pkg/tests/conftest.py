import numpy as np
import pytest

# acceptance lines collected by tests/test_acceptance.py, echoed at session end
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def smooth_image(h, w, seed=0):
    """Band-limited random texture (sum of a few low-frequency sinusoids)."""
    r = np.random.default_rng(seed)
    yy, xx = np.indices((h, w), dtype=np.float64)
    img = np.full((h, w), 0.5)
    for _ in range(6):
        fx, fy = r.uniform(-0.08, 0.08, 2)
        img += 0.08 * np.cos(2 * np.pi * (fx * xx + fy * yy) + r.uniform(0, 2 * np.pi))
    return img


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
