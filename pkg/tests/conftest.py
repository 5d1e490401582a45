import numpy as np
import pytest
from hypothesis import strategies as st

from wcrisk.measures import EmpiricalDistribution
from wcrisk.moments import MomentPair
from wcrisk.spectra import PiecewiseConstant


def random_step_spectrum(rng, max_steps=6):
    k = int(rng.integers(2, max_steps + 1))
    inner = np.sort(rng.choice(np.arange(1, 100), size=k - 1, replace=False)) / 100.0
    edges = np.concatenate([[0.0], inner, [1.0]])
    heights = np.sort(rng.uniform(0.0, 5.0, size=k))
    heights /= heights @ np.diff(edges)
    return PiecewiseConstant(tuple(edges), tuple(heights))


def random_dist(rng, n=None):
    n = n or int(rng.integers(1, 12))
    atoms = rng.normal(scale=3.0, size=n)
    probs = rng.dirichlet(np.ones(n))
    return EmpiricalDistribution(atoms, probs)


@st.composite
def step_spectra(draw, max_steps=6):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_step_spectrum(np.random.default_rng(seed), max_steps)


@st.composite
def distributions(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_dist(np.random.default_rng(seed))


moment_pairs = st.builds(
    MomentPair,
    st.floats(-50.0, 50.0, allow_nan=False),
    st.floats(1e-3, 20.0, allow_nan=False),
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
