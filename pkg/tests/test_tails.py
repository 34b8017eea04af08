import math

import pytest

from src.services.moments import cumulants
from src.services.tails import (arg_tail_saddle, compare_tail, fit_A, large_deviation_scale, rate_function,
                                solve_saddle, tail_probability_mc, tail_probability_saddle)
from src.utils.errors import RangeError
from src.utils.parallel import set_threads

P_SMALL = 10**4


def test_saddle_round_trip():
    solution = solve_saddle(0.75, 1.2, P_quad=P_SMALL)
    assert solution.kappa > 0
    assert solution.residual <= 1.2e-9
    assert cumulants(0.75, solution.kappa, P_quad=P_SMALL).M1 == pytest.approx(1.2, abs=1e-8)


def test_rate_function_derivative_is_kappa():
    sigma, tau, h = 0.75, 1.5, 1e-3
    slope = (rate_function(sigma, tau + h, P_quad=P_SMALL) - rate_function(sigma, tau - h, P_quad=P_SMALL)) / (2 * h)
    assert slope == pytest.approx(solve_saddle(sigma, tau, P_quad=P_SMALL).kappa, rel=1e-4)


def test_saddle_rejects_small_tau():
    with pytest.raises(RangeError):
        solve_saddle(0.75, 0.05, P_quad=P_SMALL)


def test_saddle_tail_is_a_probability():
    estimate = tail_probability_saddle(0.75, 1.5, P_quad=P_SMALL)
    assert 0.0 < estimate.p_saddle < 1.0
    assert estimate.correction_scale == pytest.approx(
        estimate.kappa ** (1 - 1 / 0.75) * math.log(estimate.kappa))


def test_saddle_tail_decreases_in_tau():
    low = tail_probability_saddle(0.8, 1.5, P_quad=P_SMALL).p_saddle
    high = tail_probability_saddle(0.8, 2.5, P_quad=P_SMALL).p_saddle
    assert high < low


def test_argument_tail():
    estimate = arg_tail_saddle(0.75, 1.0, P_quad=P_SMALL)
    assert estimate.family == "argument"
    assert 0.0 < estimate.p_saddle < 0.5


def test_saddle_tail_needs_tau_above_one():
    with pytest.raises(RangeError):
        tail_probability_saddle(0.75, 0.5, P_quad=P_SMALL)


def test_mc_tail_independent_of_threads(restore_threads):
    set_threads(1)
    single = tail_probability_mc(0.75, 0.5, 40000, seed=3, prime_cutoff=1000)
    set_threads(4)
    many = tail_probability_mc(0.75, 0.5, 40000, seed=3, prime_cutoff=1000)
    assert single.p_mc == many.p_mc
    assert single.mc_stderr == pytest.approx(math.sqrt(single.p_mc * (1 - single.p_mc) / 40000))


def test_mc_upper_and_lower_tails_partition():
    upper = tail_probability_mc(0.75, 0.2, 5000, seed=1, prime_cutoff=500)
    lower = tail_probability_mc(0.75, 0.2, 5000, seed=1, prime_cutoff=500, lower=True)
    assert upper.p_mc + lower.p_mc == pytest.approx(1.0)


def test_mc_rejects_empty_sample():
    with pytest.raises(RangeError):
        tail_probability_mc(0.75, 1.0, 0, seed=0)


def test_compare_tail_skips_mc_for_rare_events():
    estimate = compare_tail(0.75, 3.0, 100, seed=0, P_quad=P_SMALL)
    assert estimate.verdict == "mc-unavailable"
    assert estimate.p_mc is None


def test_compare_tail_runs_mc_for_common_events():
    estimate = compare_tail(0.75, 1.0, 20000, seed=0, P_quad=P_SMALL, cap=2000)
    assert estimate.verdict in ("agree", "disagree")
    assert estimate.mc_samples == 20000
    assert 0.0 < estimate.p_mc < 1.0


def test_large_deviation_scale():
    assert large_deviation_scale(0.5 + 0.25, math.e) == pytest.approx(math.e ** 4)


def test_fit_a():
    fit = fit_A(0.75, [1.5, 2.0, 2.5], P_quad=P_SMALL)
    assert fit.A > 0
    assert fit.stderr >= 0
    assert fit.taus == [1.5, 2.0, 2.5]


def test_fit_a_needs_two_taus():
    with pytest.raises(RangeError):
        fit_A(0.75, [2.0])
    with pytest.raises(RangeError):
        fit_A(1.0, [1.5, 2.0])
