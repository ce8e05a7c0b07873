import numpy as np

from binexperts.rng import Stream


def test_reproducible_and_keyed():
    a = Stream(42).uniform(100)
    np.testing.assert_array_equal(a, Stream(42).uniform(100))
    assert not np.array_equal(a, Stream(43).uniform(100))
    assert not np.array_equal(a, Stream(42, stream=1).uniform(100))


def test_uniform_from_raw_bits():
    raw = np.random.Philox(key=np.array([7, 0], dtype=np.uint64)).random_raw(5)
    expected = (raw >> np.uint64(11)).astype(float) * 2.0**-53
    np.testing.assert_array_equal(Stream(7).uniform(5), expected)


def test_integers_cover_closed_range():
    v = Stream(1).integers(-2, 2, 5000)
    assert v.min() == -2 and v.max() == 2
    counts = np.bincount(v + 2)
    assert (np.abs(counts - 1000) < 150).all()
    assert isinstance(Stream(1).integers(0, 3), int)


def test_normal_moments():
    z = Stream(5).normal(20000)
    assert abs(z.mean()) < 0.03
    assert abs(z.std() - 1) < 0.03


def test_negative_seed_wraps():
    np.testing.assert_array_equal(Stream(-1).uniform(3), Stream(2**64 - 1).uniform(3))
