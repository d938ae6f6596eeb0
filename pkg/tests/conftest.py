import os

import pytest
from hypothesis import HealthCheck, settings

from multisle import _backend

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = _backend.available()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    """Each available kernel implementation in turn."""
    return BACKENDS[request.param]
