import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_trial():
    """Deterministic 320-sample trial with markers at 128/192."""
    from iws.data import Trial

    gen = np.random.default_rng(7)
    return Trial(
        subject_id="t01",
        samples=gen.standard_normal((320, 14)),
        onset_sample=128,
        ending_sample=192,
    )
