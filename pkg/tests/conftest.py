import numpy as np
import pytest

from posedpp.kernels import PoseInstance


def random_psd(rng, n, rank=None, scale=1.0):
    r = n if rank is None else rank
    B = rng.normal(size=(n, r)) * scale
    return B @ B.T


def pose_1d(values, label="cat", ids=None):
    """Instances with a single visible keypoint at (value, 0); pixel-scaled use only."""
    out = []
    for i, v in enumerate(values):
        out.append(PoseInstance(i if ids is None else ids[i], label, [[v, 0.0, 1.0]], (0, 0, 100, 100)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
