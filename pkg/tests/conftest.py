import numpy as np
import pytest

from ergo import tensor


@pytest.fixture(autouse=True)
def f64_profile():
    """Run the suite in the 64-bit profile; gradient checks need it."""
    previous = tensor.active_profile()
    tensor.set_profile("f64")
    yield
    tensor.set_profile(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
