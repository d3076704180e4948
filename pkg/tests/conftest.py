import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def small_programs():
    from densitylab.machines import adversary

    return [adversary(n) for n in ("diverge", "omega", "evens-domain", "above-5")]
