import math

import numpy as np
import pytest
from scipy import special

from src.utils.errors import ConfigurationError, InsufficientTableError, RangeError
from src.utils.prime_table import get_prime_table, log_integral_tail, prime_powers, prime_zeta, prime_zeta_tail, sieve


def test_sieve_small():
    table = sieve(100)
    assert len(table) == 25
    assert table.primes[:5].tolist() == [2, 3, 5, 7, 11]
    assert table.primes[-1] == 97


def test_sieve_counts():
    assert len(sieve(10**5)) == 9592
    assert len(get_prime_table(10**6)) == 78498


def test_sieve_limit_is_inclusive():
    assert sieve(2).primes.tolist() == [2]
    assert sieve(97).primes[-1] == 97


def test_table_is_read_only():
    table = sieve(50)
    with pytest.raises(ValueError):
        table.primes[0] = 4


@pytest.mark.parametrize("limit", [1, 10**9 + 1])
def test_sieve_rejects_limit(limit):
    with pytest.raises(ConfigurationError):
        sieve(limit)


def test_primes_up_to():
    table = sieve(1000)
    assert table.primes_up_to(10).tolist() == [2, 3, 5, 7]
    assert table.primes_up_to(10.9).tolist() == [2, 3, 5, 7]
    with pytest.raises(InsufficientTableError):
        table.primes_up_to(1001)


def test_prime_powers_small():
    powers = prime_powers(sieve(100), 10)
    assert powers.values.tolist() == [2, 3, 4, 5, 7, 8, 9]
    assert powers.pairs() == [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)]


def test_prime_powers_are_unique_and_sorted():
    powers = prime_powers(sieve(10**4), 10**4)
    assert np.all(np.diff(powers.values) > 0)
    assert np.array_equal(powers.primes ** powers.exponents, powers.values)


def test_prime_powers_needs_table():
    with pytest.raises(InsufficientTableError):
        prime_powers(sieve(100), 1000)


def test_prime_zeta_known_value():
    assert prime_zeta(2.0) == pytest.approx(0.4522474200410654985, abs=1e-14)


def test_prime_zeta_large_argument_keeps_relative_precision():
    assert prime_zeta(40.0) == pytest.approx(2.0 ** -40 + 3.0 ** -40, rel=1e-12)


def test_prime_zeta_rejects_s_at_most_one():
    with pytest.raises(RangeError):
        prime_zeta(1.0)


def test_prime_zeta_tail_against_direct_sum():
    table = sieve(10**6)
    primes = table.primes.astype(float)
    direct = float(np.sum(primes[primes > 100] ** -3.0))
    tail = prime_zeta_tail(3.0, 100, table)
    # primes beyond 10^6 contribute below 10^-13 at s = 3
    assert tail == pytest.approx(direct, abs=1e-12)


def test_log_integral_tail_tracks_prime_tail():
    table = sieve(10**5)
    ratio = prime_zeta_tail(2.0, 10**4, table) / log_integral_tail(2.0, 10**4)
    assert 0.9 < ratio < 1.1
    assert log_integral_tail(2.0, 100.0) == pytest.approx(float(special.exp1(math.log(100.0))))


@pytest.mark.parametrize("s", [6.0, 12.0])
def test_prime_zeta_tail_keeps_digits_at_large_exponents(s):
    primes = sieve(10**5).primes.astype(float)
    direct = float(np.sum(primes[primes > 10**4] ** -s))
    tail = prime_zeta_tail(s, 10**4, sieve(10**4))
    assert tail > 0.0
    assert tail == pytest.approx(direct, rel=1e-3)
