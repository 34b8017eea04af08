import math

import numpy as np
import pytest

from models.pydantic_classes import Rectangle, WindingBlock
from src.services.apoints import (_seams, census, density_c, f_a, littlewood_check, littlewood_rectangle,
                                  locate_apoints, log_distance_moments, winding_block, winding_count)
from src.utils.errors import RangeError, StepError
from src.utils.zeta_eval import zeta

S0 = complex(0.7, 20.5)
A0 = zeta(S0)


def test_empty_rectangle():
    assert winding_count(5.0, 0.90, 0.91, 100.0, 101.0) == 0


def test_known_apoint_is_counted():
    block = winding_block(A0, 0.6, 0.8, 20.0, 21.0)
    assert block.count >= 1
    assert block.residual < 0.1
    assert block.retries == 0


def test_counts_add_over_a_split():
    whole = winding_count(A0, 0.6, 0.8, 20.0, 21.0)
    assert whole == winding_count(A0, 0.6, 0.8, 20.0, 20.3) + winding_count(A0, 0.6, 0.8, 20.3, 21.0)


def test_apoint_on_contour_is_retried():
    # the bottom edge passes through S0
    block = winding_block(A0, 0.6, 0.8, 20.5, 21.5)
    assert block.retries >= 1
    assert block.t_lo == pytest.approx(20.5 + 1e-3 * block.retries)
    assert block.t_hi - block.t_lo == pytest.approx(1.0)
    assert block.count == winding_count(A0, 0.6, 0.8, block.t_lo, block.t_hi)


def test_seams_cover_gaps_and_overlaps():
    inside = winding_count(A0, 0.6, 0.8, 20.4, 20.6)
    gap = _seams(A0, 0.6, 0.8, [WindingBlock(t_lo=20.0, t_hi=20.4, count=0, residual=0.0, refinements=0),
                                WindingBlock(t_lo=20.6, t_hi=21.0, count=0, residual=0.0, refinements=0)], 64)
    overlap = _seams(A0, 0.6, 0.8, [WindingBlock(t_lo=20.0, t_hi=20.6, count=0, residual=0.0, refinements=0),
                                    WindingBlock(t_lo=20.4, t_hi=21.0, count=0, residual=0.0, refinements=0)], 64)
    assert inside >= 1
    assert [(s.t_lo, s.t_hi, s.count) for s in gap] == [(20.4, 20.6, inside)]
    assert [(s.t_lo, s.t_hi, s.count) for s in overlap] == [(20.4, 20.6, -inside)]
    assert _seams(A0, 0.6, 0.8, gap, 64) == []


def test_rectangle_checks():
    with pytest.raises(RangeError):
        winding_count(0.0, 0.6, 0.8, 20.0, 21.0)
    with pytest.raises(RangeError):
        winding_count(2.0, 0.5, 0.8, 20.0, 21.0)
    with pytest.raises(RangeError):
        winding_count(2.0, 0.6, 0.8, 21.0, 20.0)


def test_locate_apoints_finds_known_point():
    roots = locate_apoints(A0, Rectangle(a1=0.6, a2=0.8, b1=20.0, b2=21.0))
    assert len(roots) == winding_count(A0, 0.6, 0.8, 20.0, 21.0)
    assert min(abs(root - S0) for root in roots) < 1e-7
    for root in roots:
        assert abs(zeta(root) - A0) < 1e-9
        assert 0.6 <= root.real < 0.8 and 20.0 <= root.imag < 21.0


def test_littlewood_rectangle_balances():
    report = littlewood_rectangle(A0, 0.6, 0.8, 20.0, 21.0)
    assert len(report.roots) >= 1
    assert report.contour_side == pytest.approx(report.root_side, abs=1e-4)


def test_littlewood_rectangle_without_apoints():
    report = littlewood_rectangle(5.0, 0.90, 0.91, 100.0, 101.0)
    assert report.roots == []
    assert abs(report.contour_side) < 1e-4


def test_f_a_far_target():
    # E zeta(sigma, X)^n = 1 for every n >= 1, so f_a = log|a - 1| once |a| exceeds the sample range
    a = 1e6
    estimate = f_a(0.75, a, 20000, seed=1, cap=2000)
    assert abs(estimate.value - math.log(a - 1.0)) <= 3 * estimate.stderr + 1e-12
    assert abs(estimate.value - math.log(a)) > 3 * estimate.stderr


def test_f_a_rejects_zero_target():
    with pytest.raises(RangeError):
        f_a(0.75, 0.0, 100)


def test_density_step_limit():
    with pytest.raises(StepError):
        density_c(2.0, 0.6, 0.8, h=0.06, n=100)
    with pytest.raises(RangeError):
        density_c(2.0, 0.6, 1.0, h=0.01, n=100)


@pytest.mark.slow
def test_density_is_positive():
    estimate = density_c(2.0, 0.6, 0.8, h=0.04, n=10**5, seed=3, cap=2000)
    assert estimate.value > 0
    assert estimate.stderr < estimate.value


def test_density_does_not_depend_on_threads(restore_threads):
    from src.utils.parallel import set_threads

    set_threads(1)
    single = density_c(2.0, 0.6, 0.8, h=0.04, n=40000, seed=1, cap=500)
    set_threads(4)
    many = density_c(2.0, 0.6, 0.8, h=0.04, n=40000, seed=1, cap=500)
    assert single == many


@pytest.mark.slow
def test_census_blocks_add_up():
    report = census(2.0, 0.55, 0.95, 100.0, h=0.04, n=20000, seed=0, cap=2000)
    assert [(block.t_lo, block.t_hi) for block in report.blocks] == [(100.0, 200.0)]
    assert report.count == sum(block.count for block in report.blocks)
    assert report.count == winding_count(2.0, 0.55, 0.95, 100.0, 200.0)
    assert report.predicted_count == pytest.approx(report.predicted_density * 100.0)


@pytest.mark.slow
def test_wider_strip_holds_more_apoints():
    assert winding_count(2.0, 0.55, 0.95, 100.0, 200.0) >= winding_count(2.0, 0.6, 0.95, 100.0, 200.0)


def test_littlewood_check_far_target():
    a = 1e3
    report = littlewood_check(a, 0.75, 1e4, n_t=2000, n_model=20000, seed=2, cap=2000)
    assert report.lhs == pytest.approx(math.log(a - 1.0), abs=1e-3)
    assert report.rhs == pytest.approx(math.log(a - 1.0), abs=1e-4)
    log_T = math.log(1e4)
    budget = 3 * math.hypot(report.lhs_stderr, report.rhs_stderr) + math.log(log_T) ** 2 / log_T ** 0.75
    assert report.gap_over_error == pytest.approx(abs(report.lhs - report.rhs) / budget)
    assert report.gap_over_error < 1.0


def test_log_distance_moments():
    log_modulus = np.array([0.0, math.log(3.0)])
    argument = np.zeros(2)
    m2, m4 = log_distance_moments(log_modulus, argument, 2.0)
    # |1 - 2| = 1 and |3 - 2| = 1
    assert m2 == pytest.approx(0.0, abs=1e-28) and m4 == pytest.approx(0.0, abs=1e-28)
    m2, m4 = log_distance_moments(np.array([math.log(2.0 + math.e)]), np.zeros(1), 2.0)
    assert m2 == pytest.approx(1.0) and m4 == pytest.approx(1.0)
