import math
import warnings

import pytest
from hypothesis import HealthCheck, settings

from infrascat import testfn as tf
from infrascat.quadrature import QuadratureWarning

settings.register_profile(
    "numerics",
    deadline=None,
    max_examples=20,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("numerics")


@pytest.fixture(autouse=True)
def _quiet_quadrature():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        yield


@pytest.fixture(scope="session")
def unit_bump():
    return tf.radial_bump()


@pytest.fixture(scope="session")
def charged_pair():
    f = tf.normalize_to_charge(tf.radial_bump((0.0, 0.0), (1.0, 1.0)), 1.0)
    g = tf.normalize_to_charge(tf.radial_bump((0.3, -0.2), (0.8, 1.1)), -0.7)
    return f, g


@pytest.fixture(scope="session")
def dipole():
    return tf.mirrored_difference((0.5, 0.2), (0.0, 0.0), (0.7, 0.7))


SQRT_2PI = math.sqrt(2.0 * math.pi)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """List of (criterion number, line) printed in the terminal summary."""
    return request.config.stash[ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
