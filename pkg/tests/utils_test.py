from itertools import chain

import pytest

from parastack.utils import (
    Pool,
    chunky,
    derive_seed,
    fmt_float,
    omega_to_wavelength,
    round_sig,
    settings,
    splitmix64,
    trapezoid_weights,
    wavelength_to_omega,
)


def my_fun(i, flaky=False):
    if flaky and i == 2:
        raise ValueError("!")
    return i


def test_pool(threaded):

    # happy path
    with Pool() as pool:
        for i in range(3):
            pool.submit(my_fun, i)
    assert pool.results == [0, 1, 2]

    # unhappy
    with pytest.raises(ValueError):
        with Pool() as pool:
            for i in range(3):
                pool.submit(my_fun, i, flaky=True)


def test_pool_size(threaded):
    with Pool(max_threads=3) as pool:
        for i in range(5):
            pool.submit(my_fun, i)
    assert pool.results == list(range(5))
    if threaded:
        assert Pool._size == 3

    with Pool() as pool:
        pool.submit(my_fun, 1)
    if threaded and settings.max_threads > 1:
        assert Pool._size == settings.max_threads


def test_chunk():
    for size in (1, 4, 13, 100):
        expected = list(range(size))
        chunks = chunky(expected)
        res = list(chain.from_iterable(chunks))
        assert res == expected


def test_splitmix64():
    # First output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derive_seed():
    seeds = [derive_seed(7, k) for k in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)
    assert derive_seed(7, 3) == seeds[3]
    assert derive_seed(8, 3) != seeds[3]


def test_fmt_float():
    assert fmt_float(1.0) == "1.00000000000E+00"
    assert fmt_float(-0.000123, digits=3) == "-1.23E-04"
    assert fmt_float(0.0, digits=2) == "0.0E+00"


def test_round_sig():
    assert round_sig(0.1234567890123456) == 0.123456789012
    assert round_sig(123456.7, 3) == 123000.0


def test_trapezoid_weights():
    assert list(trapezoid_weights([0.0, 1.0, 2.0, 3.0])) == [0.5, 1.0, 1.0, 0.5]
    assert list(trapezoid_weights([5.0])) == [1.0]


def test_wavelength_conversion():
    assert wavelength_to_omega(1.0) == pytest.approx(1.88365156730, rel=1e-10)
    assert omega_to_wavelength(wavelength_to_omega(1.3)) == pytest.approx(1.3, rel=1e-14)
