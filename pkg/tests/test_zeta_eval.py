import math

import numpy as np
import pytest

from src.utils.errors import RangeError
from src.utils.prime_table import sieve
from src.utils.zeta_eval import (QUALITY_OK, dirichlet_R, log_zeta_line, log_zeta_line_many, zeta, zeta_eta_oracle,
                                 zeta_many)


def test_zeta_two():
    assert zeta(2.0) == pytest.approx(math.pi ** 2 / 6, rel=1e-13)


@pytest.mark.parametrize("s", [0.75 + 10j, 0.55 + 1000j, 1.0 + 14.134725j, 2.5 - 300j])
def test_zeta_against_alternating_series(s):
    assert abs(zeta(s) - zeta_eta_oracle(s)) <= 1e-11 * abs(zeta_eta_oracle(s))


def test_zeta_conjugate_symmetry_is_exact():
    s = np.array([0.6 + 123.4j, 0.9 + 7.5j])
    assert np.array_equal(zeta_many(np.conj(s)), np.conj(zeta_many(s)))


def test_zeta_many_keeps_shape():
    s = 0.8 + 1j * np.arange(10.0, 16.0).reshape(2, 3)
    assert zeta_many(s).shape == (2, 3)


def test_zeta_window():
    with pytest.raises(RangeError):
        zeta(0.5 + 10j)
    with pytest.raises(RangeError):
        zeta(3.5 + 10j)
    with pytest.raises(RangeError):
        zeta(0.75 + 2e7j)
    with pytest.raises(RangeError):
        zeta(0.75 + 10j, tol=1e-14)
    assert abs(zeta(0.45 + 20j, extended=True) - zeta_eta_oracle(0.45 + 20j)) < 1e-10


def test_log_zeta_line_reproduces_zeta():
    sigma, t = 0.75, 1234.5
    value = log_zeta_line(sigma, t)
    assert value.quality == "ok"
    reconstructed = math.exp(value.log_modulus) * complex(math.cos(value.argument), math.sin(value.argument))
    assert abs(reconstructed - zeta(complex(sigma, t))) < 1e-10 * abs(zeta(complex(sigma, t)))


def test_log_zeta_line_argument_is_continuous_from_sigma_three():
    sigma, t = 0.6, 101.3
    path = np.linspace(3.0, sigma, 4001) + 1j * t
    values = zeta_many(path)
    expected = float(np.angle(values[0]) + np.sum(np.angle(values[1:] / values[:-1])))
    assert log_zeta_line(sigma, t).argument == pytest.approx(expected, abs=1e-8)


def test_log_zeta_line_many_matches_scalar():
    t = np.array([10.0, 55.5, 300.25, 999.0])
    log_modulus, argument, quality = log_zeta_line_many(0.8, t)
    for i, height in enumerate(t):
        scalar = log_zeta_line(0.8, float(height))
        assert log_modulus[i] == pytest.approx(scalar.log_modulus, abs=1e-10)
        assert argument[i] == pytest.approx(scalar.argument, abs=1e-10)
    assert quality.dtype == np.int8
    assert np.all(quality == QUALITY_OK)


def test_log_zeta_line_ranges():
    with pytest.raises(RangeError):
        log_zeta_line(0.5, 100.0)
    with pytest.raises(RangeError):
        log_zeta_line(0.75, 5.0)


def test_dirichlet_r_small_case():
    table = sieve(100)
    sigma, t = 0.7, 12.0
    expected = sum(1.0 / (n * (p ** n) ** complex(sigma, t)) for p, n in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1),
                                                                           (2, 3), (3, 2)])
    assert dirichlet_R(sigma, t, 10, table) == pytest.approx(expected, abs=1e-13)


def test_dirichlet_r_vectorized_and_conjugate():
    table = sieve(1000)
    t = np.array([-40.0, 40.0, 500.0])
    values = dirichlet_R(0.75, t, 1000, table)
    assert values.shape == (3,)
    assert values[0] == np.conj(values[1])
    assert values[2] == pytest.approx(dirichlet_R(0.75, 500.0, 1000, table), abs=1e-12)
