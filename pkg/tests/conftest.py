import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# property tests share the process with quadrature-heavy tests; a wall-clock
# deadline would make them flaky on a loaded machine
settings.register_profile(
    "kdclass",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kdclass")


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
