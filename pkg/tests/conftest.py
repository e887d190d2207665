import numpy as np
import pytest

from baryreduce.core import make_distribution


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_distribution(rng, T, d, rational=False):
    """A random distribution; rational weights use small-denominator fractions."""
    atoms = rng.normal(size=(T, d))
    if rational:
        num = rng.integers(1, 9, size=T)
        w = num / num.sum()
    else:
        w = rng.random(T)
        w = w / w.sum()
    return make_distribution(atoms, w)
