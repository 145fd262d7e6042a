import os

import pytest
from hypothesis import HealthCheck, settings

from autopar.frontend import parse_program
from oracles import FIB

settings.register_profile(
    "autopar", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60,
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "autopar"))


@pytest.fixture
def fib_source():
    return FIB


@pytest.fixture
def parse():
    return lambda src: parse_program(src, "t.mpl")
