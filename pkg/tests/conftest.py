import numpy as np
import pytest

from burstsched.core import CameraConfig
from burstsched.scenes import frames_needed, static_scene, translating_scene


@pytest.fixture(scope="session")
def cfg():
    return CameraConfig()


@pytest.fixture(scope="session")
def n_frames(cfg):
    return frames_needed(cfg)


@pytest.fixture(scope="session")
def static_seq(n_frames):
    return static_scene(32, 32, n_frames, seed=3)


@pytest.fixture(scope="session")
def moving_seq(n_frames):
    return translating_scene(32, 32, n_frames, (0.3, 0.5), seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


@pytest.fixture
def report_criterion(request):
    """Record a one-line verdict for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
