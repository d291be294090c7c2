import numpy as np
import pytest

from gridrocket import GenOptions, generate_bank


def random_config(seed):
    """One random (values, bank) pair within the small-configuration bounds."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    n_instances = int(rng.integers(1, 51))
    n_channels = int(rng.integers(1, 5))
    l_series = int(rng.integers(32, 257))
    n_kernels = int(rng.integers(1, 101))
    values = rng.standard_normal((n_instances, n_channels, l_series))
    bank = generate_bank(l_series, n_channels, n_kernels, GenOptions(seed=seed + 1))
    return values, bank


@pytest.fixture
def small_bank():
    return generate_bank(64, 1, 20, GenOptions(seed=11))


@pytest.fixture
def small_values():
    rng = np.random.Generator(np.random.Philox(key=np.uint64(5)))
    return rng.standard_normal((6, 1, 64))
