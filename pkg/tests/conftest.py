import numpy as np
import pytest

from rfedit import kernels
from rfedit.harness.config import config_from_dict
from rfedit.harness.presets import preset
from rfedit.velocity import GaussianMixture


@pytest.fixture(scope="session")
def std_cfg():
    return config_from_dict(preset("standard"))


@pytest.fixture(scope="session")
def tiny_cfg():
    return config_from_dict(preset("tiny"))


@pytest.fixture
def numpy_backend():
    prev = kernels.set_backend("numpy")
    yield
    kernels.set_backend(prev)


def random_mixture(rng, d, K):
    """Well-conditioned random mixture for property-style tests."""
    w = rng.uniform(0.2, 1.0, K)
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    means = rng.normal(0.0, 1.5, (K, d))
    covs = []
    for _ in range(K):
        a = rng.normal(size=(d, d)) / np.sqrt(d)
        covs.append(0.5 * a @ a.T + 0.3 * np.eye(d))
    return GaussianMixture(w, means, np.array(covs))


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
