import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pathqv.paths import SampledPath

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

finite = st.floats(min_value=-4.0, max_value=4.0, allow_nan=False, allow_infinity=False)
gap = st.floats(min_value=1e-3, max_value=1.0, allow_nan=False)


@st.composite
def step_paths(draw, min_size=1, max_size=40, dims=(1, 1), dyadic=False):
    """Random step paths; ``dyadic`` draws values on the 2^-6 grid."""
    d = draw(st.integers(*dims))
    m = draw(st.integers(min_size, max_size))
    gaps = draw(st.lists(gap, min_size=m - 1, max_size=m - 1))
    times = np.concatenate([[0.0], np.cumsum(gaps)]) if m > 1 else np.zeros(1)
    if dyadic:
        ints = draw(st.lists(st.integers(-256, 256), min_size=m * d, max_size=m * d))
        values = np.ldexp(np.asarray(ints, dtype=float), -6)
    else:
        values = np.asarray(draw(st.lists(finite, min_size=m * d, max_size=m * d)))
    extra = draw(st.floats(min_value=0.0, max_value=1.0))
    return SampledPath(times, values.reshape(m, d), horizon=float(times[-1]) + extra + 1e-3)


def random_path(rng, m, d=1, scale=1.0):
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 1.0, m - 1))])
    return SampledPath(times, rng.uniform(-scale, scale, (m, d)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
