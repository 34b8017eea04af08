import math
from typing import Callable, Tuple

import numpy as np

from models.pydantic_classes import PerronKernelSpec, QuadratureSpec, Rectangle
from src.config import ADAPTIVE_ABS_TOL
from src.utils.errors import QuadratureError, RangeError
from src.utils.logger import setup_logger
from src.utils.special_functions import integrate

logger = setup_logger(__name__)

_PANELS_PER_PERIOD = 2
_MAX_PANELS = 200_000
_PERRON_PANEL = 50.0
_PANEL_SPEC = QuadratureSpec(rule="adaptive-interval", abs_tol=1e-14, max_nodes=2**12)


def selberg_G(u: float) -> float:
    """
    G(u) = 2u/pi + 2(1 - u) u cot(pi u) on [0, 1], with G(0) = 2/pi and G(1) = 0.

    Raises:
        RangeError: u outside [0, 1].
    """
    if not 0.0 <= u <= 1.0:
        raise RangeError(f"selberg_G needs u in [0, 1], got {u}", "smoothing", "selberg_G")
    if u == 0.0:
        return 2.0 / math.pi
    if u == 1.0:
        return 0.0
    return 2.0 * u / math.pi + 2.0 * (1.0 - u) * u / math.tan(math.pi * u)


def _panel_integral(func: Callable[[float], float], upper: float, frequency: float, operation: str) -> float:
    """int_0^upper func, split into panels of a half period of the dominant oscillation."""
    panels = int(min(_MAX_PANELS, max(1, math.ceil(_PANELS_PER_PERIOD * upper * abs(frequency)))))
    edges = np.linspace(0.0, upper, panels + 1)
    total, err = 0.0, 0.0
    try:
        for a, b in zip(edges[:-1], edges[1:]):
            value, panel_err = integrate(func, _PANEL_SPEC, (float(a), float(b)))
            total += value
            err += panel_err
    except QuadratureError as e:
        raise QuadratureError(f"oscillatory integral failed on [{a:.6g}, {b:.6g}]", best_estimate=total,
                              err_est=err, module="smoothing", operation=operation) from e
    return total


def sgn_approx(x: float, L: float) -> float:
    """
    int_0^L G(u/L) sin(2 pi u x) du/u, a smooth approximation of sgn(x).

    The integrand is written as G(u/L) 2 pi x sinc(2 u x), regular at u = 0.

    Args:
        x (float): Point.
        L (float): Bandwidth, 0 < L <= 1e4.

    Returns:
        float: The approximation; sgn_approx(0, L) = 0.
    """
    if not 0.0 < L <= 1e4:
        raise RangeError(f"L = {L} outside (0, 1e4]", "smoothing", "sgn_approx")
    if x == 0.0:
        return 0.0

    def integrand(u: float) -> float:
        return selberg_G(min(u / L, 1.0)) * 2.0 * math.pi * x * float(np.sinc(2.0 * u * x))

    return _panel_integral(integrand, L, x, "sgn_approx")


def fejer_kernel(x: float, L: float) -> float:
    """(sin(pi L x)/(pi L x))^2."""
    return float(np.sinc(L * x) ** 2)


def f_alpha_beta(u: float, alpha: float, beta: float) -> complex:
    """f_(alpha, beta)(u) = (e^(-2 pi i alpha u) - e^(-2 pi i beta u))/2."""
    return (np.exp(-2j * math.pi * alpha * u) - np.exp(-2j * math.pi * beta * u)) / 2.0


def interval_approx(x: float, alpha: float, beta: float, L: float) -> float:
    """
    Im int_0^L G(u/L) e^(2 pi i u x) f_(alpha, beta)(u) du/u, approximating 1_(alpha, beta)(x).

    With f(u)/u = -i pi (alpha - beta) e^(-i pi (alpha + beta) u) sinc((alpha - beta) u),
    the imaginary part reduces to
    pi (beta - alpha) int_0^L G(u/L) cos(2 pi u (x - m)) sinc((beta - alpha) u) du, m = (alpha + beta)/2.
    """
    width = beta - alpha
    shift = x - 0.5 * (alpha + beta)

    def integrand(u: float) -> float:
        return selberg_G(min(u / L, 1.0)) * math.cos(2.0 * math.pi * u * shift) * float(np.sinc(width * u))

    frequency = abs(shift) + abs(width)
    return math.pi * width * _panel_integral(integrand, L, frequency, "rect_W")


def rect_W(z: complex, rect: Rectangle, L: float) -> float:
    """
    Smooth approximation W_(L, R)(z) of the indicator of rect.

    W = 1/2 Re int int G(u/L) G(v/L) (e^(2 pi i(ux - vy)) f_a(u) conj(f_b(v))
    - e^(2 pi i(ux + vy)) f_a(u) f_b(v)) du/u dv/v. The double integral factors into
    one-dimensional integrals w1, w2 and equals Im(w1) Im(w2).

    Args:
        z (complex): Point x + iy.
        rect (Rectangle): Target rectangle.
        L (float): Bandwidth, 0 < L <= 1e3.

    Returns:
        float: W_(L, R)(z).
    """
    if not 0.0 < L <= 1e3:
        raise RangeError(f"L = {L} outside (0, 1e3]", "smoothing", "rect_W")
    z = complex(z)
    horizontal = interval_approx(z.real, rect.a1, rect.a2, L)
    vertical = interval_approx(z.imag, rect.b1, rect.b2, L)
    return horizontal * vertical


def rect_error_envelope(z: complex, rect: Rectangle, L: float) -> float:
    """Sum of the four Fejer terms at the rectangle's edges."""
    z = complex(z)
    return (fejer_kernel(z.real - rect.a1, L) + fejer_kernel(z.real - rect.a2, L)
            + fejer_kernel(z.imag - rect.b1, L) + fejer_kernel(z.imag - rect.b2, L))


def fejer_identity_check(x: float, L: float) -> Tuple[float, float]:
    """
    Both sides of (sin(pi L x)/(pi L x))^2 = (2/L^2) int_0^L (L - v) cos(2 pi x v) dv.

    Returns:
        tuple: (lhs, rhs) with rhs by adaptive quadrature.
    """
    if L <= 0:
        raise RangeError("L must be positive", "smoothing", "fejer_identity_check")
    spec = QuadratureSpec(rule="adaptive-interval", abs_tol=ADAPTIVE_ABS_TOL * 1e-2)
    integral, _ = integrate(lambda v: (L - v) * math.cos(2.0 * math.pi * x * v), spec, (0.0, L))
    return fejer_kernel(x, L), 2.0 * integral / (L * L)


def perron_kernel(s: complex, spec: PerronKernelSpec) -> complex:
    """
    ((e^(lambda s) - 1)/(lambda s))^N, equal to 1 at s = 0.

    Below |lambda s| = 1e-4 the ratio comes from 1 + w/2 + w^2/6.
    """
    w = spec.lam * complex(s)
    if abs(w) < 1e-4:
        ratio = 1.0 + w / 2.0 + w * w / 6.0
    else:
        ratio = np.expm1(w) / w
    return complex(ratio) ** spec.N


def _contour_integral(y: float, spec: PerronKernelSpec, t_max: float, damp: bool) -> float:
    """(1/2 pi i) int y^s K(s) [e^(-lambda N s)] ds/s along Re s = kappa, truncated at |Im s| = t_max."""
    log_y = math.log(y)
    shift = spec.lam * spec.N if damp else 0.0

    def integrand(t: float) -> float:
        s = complex(spec.kappa, t)
        return (np.exp(s * (log_y - shift)) * perron_kernel(s, spec) / s).real

    edges = np.arange(0.0, t_max + _PERRON_PANEL, _PERRON_PANEL)
    edges[-1] = t_max
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        value, _ = integrate(integrand, _PANEL_SPEC, (float(a), float(b)))
        total += value
    return total / math.pi


def perron_bracket_check(y: float, spec: PerronKernelSpec, t_max: float = 1e4) -> Tuple[float, float]:
    """
    Lower and upper smoothed-Perron integrals around the indicator chi(y) of y > 1.

    The upper integral uses ((e^(lambda s) - 1)/(lambda s))^N, the lower one carries an
    extra e^(-lambda N s); chi_lower <= chi(y) <= chi_upper.

    Args:
        y (float): Point, e^(-lambda N)/2 <= y <= 2.
        spec (PerronKernelSpec): Kernel parameters.
        t_max (float): Truncation of the contour, <= 1e4.

    Returns:
        tuple: (lower, upper).
    """
    if not 0.5 * math.exp(-spec.lam * spec.N) <= y <= 2.0:
        raise RangeError(f"y = {y} outside [e^(-lambda N)/2, 2]", "smoothing", "perron_bracket_check")
    if not 0.0 < t_max <= 1e4:
        raise RangeError("t_max must lie in (0, 1e4]", "smoothing", "perron_bracket_check")
    lower = _contour_integral(y, spec, t_max, damp=True)
    upper = _contour_integral(y, spec, t_max, damp=False)
    logger.debug(f"Perron bracket at y={y}: [{lower:.6f}, {upper:.6f}]")
    return lower, upper
