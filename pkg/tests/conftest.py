import numpy as np
import pytest

from vqvsc import pipeline
from vqvsc.datasets import synthetic_video


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus():
    return synthetic_video()


@pytest.fixture(scope="session")
def default_cfg():
    return pipeline.ExperimentConfig(seed=1)


@pytest.fixture(scope="session")
def resources(default_cfg):
    return pipeline.Resources(default_cfg)


def random_frame(rng, h=16, w=16):
    return rng.integers(0, 256, size=(3, h, w), dtype=np.uint8)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
