import numpy as np
import pytest

from postsim.rng import MAX_SEED, check_seed, complex_gaussian, stream, time_seed


def test_streams_are_reproducible_and_independent():
    a = stream(5, 1, 2).random(4)
    assert np.array_equal(a, stream(5, 1, 2).random(4))
    assert not np.array_equal(a, stream(5, 1, 3).random(4))
    assert not np.array_equal(a, stream(6, 1, 2).random(4))


def test_seed_range():
    assert check_seed(MAX_SEED) == MAX_SEED
    for bad in (-1, MAX_SEED + 1):
        with pytest.raises(ValueError):
            check_seed(bad)
    assert 0 <= time_seed() <= MAX_SEED


def test_complex_gaussian_unit_variance():
    z = complex_gaussian(stream(1), 200_000)
    assert abs(np.mean(np.abs(z) ** 2) - 1) < 0.01
    assert abs(np.mean(z)) < 0.01
