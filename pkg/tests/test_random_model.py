import math

import numpy as np
import pytest

from src.config import MODEL_PRIME_CAP, MODEL_TRUNCATION_SD
from src.services.random_model import (RandomModel, _Streams, _stream_generator, default_prime_cutoff, get_model,
                                       model_config, moment_oracle_small, sample_log_zeta, sample_R, truncation_sd)
from src.utils.errors import ComplexityGuardError, RangeError
from src.utils.parallel import set_threads
from src.utils.prime_table import sieve


@pytest.fixture
def small_model():
    return get_model(model_config(0.75, master_seed=11, prime_cutoff=1000))


def test_default_cutoff_is_capped_near_half_line():
    assert default_prime_cutoff(0.75) == MODEL_PRIME_CAP


def test_default_cutoff_meets_target():
    P = default_prime_cutoff(1.0, target_sd=1e-2)
    assert P < MODEL_PRIME_CAP
    assert math.sqrt(0.5 / (P * math.log(P))) <= 1e-2 * (1 + 1e-9)


def test_truncation_sd_decreases_with_cutoff():
    table = sieve(10**5)
    assert truncation_sd(0.75, 10**5, table) < truncation_sd(0.75, 10**3, table)


def test_sample_matches_single_draws(small_model):
    log_modulus, argument = small_model.sample(20, start=5)
    draw = sample_log_zeta(small_model.cfg, 12)
    assert draw.log_modulus == log_modulus[7]
    assert draw.argument == argument[7]


def test_sample_independent_of_thread_count(small_model, restore_threads):
    set_threads(1)
    single = small_model.sample(3000)
    set_threads(4)
    many = small_model.sample(3000)
    assert np.array_equal(single[0], many[0])
    assert np.array_equal(single[1], many[1])


def test_sigmas_share_phases():
    wide = RandomModel(model_config(0.7, master_seed=3, prime_cutoff=500))
    narrow = RandomModel(model_config(0.9, master_seed=3, prime_cutoff=500))
    log_modulus, argument = wide.sample(50, sigmas=[0.7, 0.9])
    assert log_modulus.shape == (2, 50)
    assert np.array_equal(log_modulus[1], narrow.sample(50)[0])
    assert np.array_equal(argument[1], narrow.sample(50)[1])


def test_seeds_give_different_streams():
    first = RandomModel(model_config(0.75, master_seed=1, prime_cutoff=100)).sample(10)[0]
    second = RandomModel(model_config(0.75, master_seed=2, prime_cutoff=100)).sample(10)[0]
    assert not np.array_equal(first, second)


def test_log_modulus_has_zero_mean(small_model):
    log_modulus, argument = small_model.sample(20000)
    se = log_modulus.std() / math.sqrt(log_modulus.size)
    assert abs(log_modulus.mean()) < 5 * se
    assert abs(argument.mean()) < 5 * argument.std() / math.sqrt(argument.size)


def test_second_moment_matches_euler_product():
    sigma = 0.9
    model = RandomModel(model_config(sigma, master_seed=5, prime_cutoff=200))
    log_modulus, _ = model.sample(20000)
    squares = np.exp(2 * log_modulus)
    expected = float(np.prod(1.0 / (1.0 - model.primes.astype(float) ** (-2 * sigma))))
    assert abs(squares.mean() - expected) < 5 * squares.std() / math.sqrt(squares.size)


def test_gaussian_compensation_adds_tail_noise():
    drop = RandomModel(model_config(0.75, master_seed=8, prime_cutoff=1000))
    compensated = RandomModel(model_config(0.75, master_seed=8, prime_cutoff=1000, tail_mode="gaussian-compensate"))
    difference = compensated.sample(4000)[0] - drop.sample(4000)[0]
    assert difference.std() == pytest.approx(compensated.tail_sd(0.75), rel=0.1)


def test_dirichlet_polynomial_second_moment():
    sigma, Y = 0.75, 100.0
    model = RandomModel(model_config(sigma, master_seed=2, prime_cutoff=1000))
    values = model.sample_R(Y, 20000)
    powers = sieve(1000).prime_powers(Y)
    expected = float(np.sum(powers.values.astype(float) ** (-2 * sigma) / powers.exponents.astype(float) ** 2))
    squares = np.abs(values) ** 2
    assert abs(squares.mean() - expected) < 5 * squares.std() / math.sqrt(squares.size)
    single = sample_R(model.cfg, Y, 17)
    assert single.log_modulus == pytest.approx(values[17].real, abs=1e-14)


def test_sample_r_needs_cutoff_above_y(small_model):
    with pytest.raises(RangeError):
        small_model.sample_R(5000.0, 10)


def test_negative_stream_index(small_model):
    with pytest.raises(RangeError):
        sample_log_zeta(small_model.cfg, -1)


def test_model_config_validation():
    with pytest.raises(ValueError):
        model_config(0.5, prime_cutoff=100)


def test_moment_oracle_two_primes():
    sigma = 0.7
    r2, r3 = 2 ** -sigma, 3 ** -sigma
    assert moment_oracle_small([2, 3], sigma, 1) == pytest.approx(r2 ** 2 + r3 ** 2, rel=1e-15)
    assert moment_oracle_small([2, 3], sigma, 2) == pytest.approx(r2 ** 4 + r3 ** 4 + 4 * r2 ** 2 * r3 ** 2, rel=1e-15)


def test_moment_oracle_agrees_with_monte_carlo():
    primes, sigma = [2, 3, 5], 0.6
    rng = np.random.default_rng(4)
    theta = rng.uniform(0, 2 * np.pi, size=(200000, 3))
    values = np.abs(np.sum(np.exp(1j * theta) * np.array(primes, dtype=float) ** -sigma, axis=1)) ** 6
    oracle = moment_oracle_small(primes, sigma, 3)
    assert abs(values.mean() - oracle) < 5 * values.std() / math.sqrt(values.size)


def test_moment_oracle_guard():
    with pytest.raises(ComplexityGuardError):
        moment_oracle_small([2, 3, 5, 7, 11, 13, 17], 0.75, 1)
    with pytest.raises(ComplexityGuardError):
        moment_oracle_small([2, 3], 0.75, 4)


@pytest.mark.parametrize("sigma", [0.9, 1.0])
def test_uncapped_cutoff_meets_truncation_target(sigma):
    cfg = model_config(sigma, cap=10**6)
    assert cfg.prime_cutoff < 10**6
    assert truncation_sd(sigma, cfg.prime_cutoff) < MODEL_TRUNCATION_SD


def test_capped_drop_model_is_flagged(monkeypatch):
    from src.services import random_model

    warnings = []
    monkeypatch.setattr(random_model.logger, "warning", warnings.append)
    model_config(0.75, cap=1000)
    assert len(warnings) == 1 and "truncation sd" in warnings[0]
    model_config(0.75, tail_mode="gaussian-compensate", cap=1000)
    model_config(0.75, prime_cutoff=1000)
    assert len(warnings) == 1


def test_repositioned_streams_match_fresh_generators():
    streams = _Streams(9)
    first = streams.at(4).random(6)
    streams.at(17).random(3)
    assert np.array_equal(streams.at(4).random(6), first)
    assert np.array_equal(_stream_generator(9, 4).random(6), first)
    assert not np.array_equal(_stream_generator(9, 5).random(6), first)


def test_phases_come_from_stream_generators(small_model):
    thetas, _ = small_model._phase_block(3, 5, 10, False)
    assert np.allclose(thetas[1], 2.0 * math.pi * _stream_generator(11, 4).random(10), rtol=0, atol=1e-15)


def test_sample_r_block_is_split_invariant(small_model):
    whole = small_model.sample_R_block(200.0, 0, 12)
    halves = np.concatenate([small_model.sample_R_block(200.0, 0, 5), small_model.sample_R_block(200.0, 5, 12)])
    assert np.allclose(whole, halves, rtol=1e-13, atol=1e-13)
