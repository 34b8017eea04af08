import math

import pytest

from models.pydantic_classes import PerronKernelSpec, Rectangle
from src.services.smoothing import (f_alpha_beta, fejer_identity_check, fejer_kernel, interval_approx,
                                    perron_bracket_check, perron_kernel, rect_error_envelope, rect_W, selberg_G,
                                    sgn_approx)
from src.utils.errors import RangeError


def test_selberg_g_values():
    assert selberg_G(0.0) == 2.0 / math.pi
    assert selberg_G(1.0) == 0.0
    assert selberg_G(0.5) == pytest.approx(1.0 / math.pi, abs=1e-15)
    with pytest.raises(RangeError):
        selberg_G(1.5)


def test_sgn_approx_is_odd_and_vanishes_at_zero():
    assert sgn_approx(0.0, 8.0) == 0.0
    assert sgn_approx(-0.37, 10.0) == pytest.approx(-sgn_approx(0.37, 10.0), abs=1e-12)


@pytest.mark.parametrize("x", [0.37, -0.37, 1.23, 2.05])
def test_sgn_approx_within_fejer_envelope(x):
    L = 10.0
    error = abs(sgn_approx(x, L) - math.copysign(1.0, x))
    assert error <= 5.0 * fejer_kernel(x, L) + 1e-9


def test_sgn_approx_bandwidth_range():
    with pytest.raises(RangeError):
        sgn_approx(0.5, 2e4)


@pytest.mark.parametrize("x, L", [(0.3, 2.0), (-1.7, 7.5), (2.9, 19.0)])
def test_fejer_identity(x, L):
    lhs, rhs = fejer_identity_check(x, L)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_f_alpha_beta_at_zero():
    assert f_alpha_beta(0.0, -1.0, 1.0) == 0


def test_interval_approx_inside_and_outside():
    L = 10.5
    assert interval_approx(0.0, -1.0, 1.0, L) == pytest.approx(1.0, abs=5 * fejer_kernel(1.0, L) + 1e-8)
    envelope = fejer_kernel(2.3, L) + fejer_kernel(4.3, L)
    assert interval_approx(3.3, -1.0, 1.0, L) == pytest.approx(0.0, abs=5 * envelope + 1e-8)


def test_rect_w_tracks_indicator():
    rect = Rectangle(a1=-1.0, a2=1.0, b1=-1.0, b2=1.0)
    L = 10.5
    inside, outside = 0.0 + 0.0j, 3.3 + 3.3j
    assert abs(rect_W(inside, rect, L) - 1.0) <= 5 * rect_error_envelope(inside, rect, L) + 1e-8
    assert abs(rect_W(outside, rect, L)) <= 5 * rect_error_envelope(outside, rect, L) + 1e-8


def test_rectangle_needs_ordered_edges():
    with pytest.raises(ValueError):
        Rectangle(a1=1.0, a2=0.0, b1=0.0, b2=1.0)
    assert Rectangle(a1=0.0, a2=1.0, b1=0.0, b2=1.0).contains(1.0, 0.0)


def test_perron_kernel():
    spec = PerronKernelSpec(**{"lambda": 0.01, "N": 10})
    assert perron_kernel(0.0, spec) == 1.0
    assert abs(perron_kernel(1e-7j, spec) - 1.0) < 1e-8
    for t in (-1e3, -10.0, 10.0, 1e3):
        assert abs(perron_kernel(complex(spec.kappa, t), spec)) <= 3.0 ** spec.N
    s = 2.0 + 5.0j
    assert perron_kernel(s, spec) == pytest.approx(((math.e ** (0.01 * s) - 1) / (0.01 * s)) ** 10, rel=1e-12)


def test_perron_spec_regime():
    with pytest.raises(ValueError):
        PerronKernelSpec(lam=0.6, N=2)


@pytest.mark.slow
def test_perron_bracket():
    spec = PerronKernelSpec(lam=0.01, N=10, kappa=1.0)
    lower, upper = perron_bracket_check(2.0, spec)
    assert abs(lower - 1.0) <= 0.02 and abs(upper - 1.0) <= 0.02
    lower, upper = perron_bracket_check(0.5, spec)
    assert abs(lower) <= 0.02 and abs(upper) <= 0.02


def test_perron_bracket_range():
    with pytest.raises(RangeError):
        perron_bracket_check(3.0, PerronKernelSpec(lam=0.01, N=10))
