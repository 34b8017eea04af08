import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

from models.pydantic_classes import QuadratureSpec
from src.config import PERIODIC_MIN_NODES, SEMI_INFINITE_CUTOFF
from src.utils.errors import QuadratureError, RangeError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

ArrayLike = Union[float, np.ndarray]

_I0_MAX = 700.0
_J0_MAX = 1e8
_X_RANGE = 700.0


def _result(values: np.ndarray, original) -> ArrayLike:
    return float(values) if np.ndim(original) == 0 else values


def bessel_I0(x: ArrayLike) -> ArrayLike:
    """
    Modified Bessel function I0 for 0 <= x <= 700.

    Raises:
        RangeError: If x is negative or above 700; use log_I0 there.
    """
    values = np.asarray(x, dtype=float)
    if np.any(values < 0) or np.any(values > _I0_MAX):
        raise RangeError("bessel_I0 needs 0 <= x <= 700; use log_I0 beyond", "special_functions", "bessel_I0")
    return _result(special.i0(values), x)


def bessel_J0(x: ArrayLike) -> ArrayLike:
    """
    Bessel function J0 for |x| <= 1e8, evaluated at |x| so J0(-x) = J0(x) exactly.

    Raises:
        RangeError: If |x| > 1e8.
    """
    values = np.abs(np.asarray(x, dtype=float))
    if np.any(values > _J0_MAX):
        raise RangeError("bessel_J0 needs |x| <= 1e8", "special_functions", "bessel_J0")
    return _result(special.j0(values), x)


def _log_I0_small(u: np.ndarray) -> np.ndarray:
    # I0(u) - 1 by its power series, exact to rounding for u < 1
    x = u * u / 4.0
    term = np.ones_like(u)
    series = np.zeros_like(u)
    for k in range(1, 16):
        term = term * x / (k * k)
        series = series + term
    return np.log1p(series)


def log_I0(u: ArrayLike) -> ArrayLike:
    """
    f(u) = log I0(u) for u >= 0, stable for every magnitude.

    Args:
        u (float | np.ndarray): Non-negative argument(s).

    Returns:
        float | np.ndarray: log I0(u).
    """
    values = np.asarray(u, dtype=float)
    if np.any(values < 0):
        raise RangeError("log_I0 needs u >= 0", "special_functions", "log_I0")
    small = values < 1.0
    out = np.empty_like(values)
    out[small] = _log_I0_small(values[small])
    large = values[~small]
    out[~small] = np.log(special.i0e(large)) + large
    return _result(out, u)


def log_I0_derivatives(u: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike, ArrayLike]:
    """
    f = log I0 and its first three derivatives, from Bessel ratios r_k = I_k/I0.

    f' = r1, f'' = (1 + r2)/2 - r1^2 and
    f''' = (r1 + r3)/4 - r1 r2/2 - 2 r1 f''.

    Args:
        u (float | np.ndarray): Non-negative argument(s).

    Returns:
        tuple: (f, f', f'', f''').
    """
    values = np.asarray(u, dtype=float)
    scale = special.i0e(values)
    r1 = special.i1e(values) / scale
    r2 = special.ive(2, values) / scale
    r3 = special.ive(3, values) / scale
    f2 = (1.0 + r2) / 2.0 - r1 * r1
    f3 = (r1 + r3) / 4.0 - r1 * r2 / 2.0 - 2.0 * r1 * f2
    f0 = np.asarray(log_I0(values), dtype=float)
    return _result(f0, u), _result(r1, u), _result(f2, u), _result(f3, u)


def periodic_mean(func: Callable[[np.ndarray], np.ndarray], abs_tol: float, max_nodes: int,
                  domain: Tuple[float, float] = (0.0, 2.0 * math.pi),
                  min_nodes: int = PERIODIC_MIN_NODES) -> Tuple[np.ndarray, float]:
    """
    Mean of a periodic integrand over one period by the trapezoid rule with node doubling.

    func receives the node array of shape (n,) and returns values whose last axis runs
    over the nodes; every leading entry is averaged independently and convergence is
    declared when the largest change between two doublings is below abs_tol.

    Args:
        func (Callable): Vectorized integrand.
        abs_tol (float): Absolute tolerance on the mean.
        max_nodes (int): Node budget.
        domain (tuple): One full period.
        min_nodes (int): Nodes of the first pass.

    Returns:
        tuple: (mean, err_est); mean has the leading shape of func's output.

    Raises:
        QuadratureError: If the budget is exhausted.
    """
    a, b = domain
    n = min_nodes
    total = np.sum(func(a + (b - a) * np.arange(n) / n), axis=-1)
    mean = total / n
    err = math.inf
    while 2 * n <= max_nodes:
        midpoints = a + (b - a) * (np.arange(n) + 0.5) / n
        total = total + np.sum(func(midpoints), axis=-1)
        n *= 2
        refined = total / n
        err = float(np.max(np.abs(refined - mean)))
        mean = refined
        if err < abs_tol:
            logger.debug(f"Periodic trapezoid converged with {n} nodes (err {err:.2e})")
            return mean, err
    raise QuadratureError(f"periodic trapezoid did not converge within {max_nodes} nodes",
                          best_estimate=mean, err_est=err,
                          module="special_functions", operation="integrate")


def _quad(func, a: float, b: float, abs_tol: float, limit: int, points: Optional[Sequence[float]]):
    kwargs = {"epsabs": abs_tol, "epsrel": 1e-13, "limit": limit, "full_output": 1}
    if points is not None and math.isfinite(a) and math.isfinite(b):
        kwargs["points"] = list(points)
    result = sp_integrate.quad(func, a, b, **kwargs)
    value, err = float(result[0]), float(result[1])
    if len(result) > 3 and err > 1e3 * abs_tol and err > 1e-12 * abs(value):
        raise QuadratureError(f"adaptive quadrature failed: {result[3]}", best_estimate=value, err_est=err,
                              module="special_functions", operation="integrate")
    return value, err


def _sample_point(a: float, b: float, points: Optional[Sequence[float]]) -> float:
    """An interior point away from both ends and from every declared singular point."""
    if not (math.isfinite(a) and math.isfinite(b)):
        return a + 1.0 if math.isfinite(a) else b - 1.0
    avoid = [a, b] + list(points or [])
    candidates = [a + fraction * (b - a) for fraction in (0.37, 0.61, 0.23, 0.83, 0.11)]
    return max(candidates, key=lambda x: min(abs(x - p) for p in avoid))


def _adaptive(func, a: float, b: float, abs_tol: float, limit: int,
              points: Optional[Sequence[float]]) -> Tuple[Union[float, complex], float]:
    if np.iscomplexobj(func(_sample_point(a, b, points))):
        re, re_err = _quad(lambda x: float(np.real(func(x))), a, b, abs_tol, limit, points)
        im, im_err = _quad(lambda x: float(np.imag(func(x))), a, b, abs_tol, limit, points)
        return complex(re, im), math.hypot(re_err, im_err)
    return _quad(lambda x: float(func(x)), a, b, abs_tol, limit, points)


def _edge_tail(transformed, edge: float, inward: float) -> Tuple[float, float]:
    """
    Integral past edge of an integrand decaying exponentially in x, with its error.

    The rate is read off the last two steps towards the edge; their disagreement
    sets the error.
    """
    outer, middle, inner = (float(transformed(edge + k * inward)) for k in (0, 1, 2))
    if outer == 0.0:
        return 0.0, 0.0
    if middle == 0.0 or inner == 0.0 or outer * middle < 0 or middle * inner < 0:
        raise QuadratureError("integrand changes sign near the truncation edge", best_estimate=outer,
                              module="special_functions", operation="integrate")
    step = abs(inward)
    rate = math.log(abs(middle / outer)) / step
    previous = math.log(abs(inner / middle)) / step
    if rate <= 0 or abs(rate - previous) > 0.1 * rate:
        raise QuadratureError("integrand does not decay on the truncated range", err_est=abs(outer),
                              module="special_functions", operation="integrate")
    tail = outer / rate
    return tail, abs(tail) * abs(rate - previous) / rate


def _semi_infinite(func, a: float, abs_tol: float, limit: int) -> Tuple[float, float]:
    def transformed(x):
        u = a + np.exp(x)
        return func(u) * np.exp(x)

    def magnitude(x):
        return abs(float(transformed(x)))

    scale = max(magnitude(0.0), 1e-300)
    x_lo = 0.0
    while x_lo > -_X_RANGE:
        x_lo = max(x_lo - 2.0, -_X_RANGE)
        value = magnitude(x_lo)
        scale = max(scale, value)
        if value < SEMI_INFINITE_CUTOFF * scale:
            break
    x_hi = 0.0
    while x_hi < _X_RANGE:
        x_hi = min(x_hi + 2.0, _X_RANGE)
        value = magnitude(x_hi)
        scale = max(scale, value)
        if value < SEMI_INFINITE_CUTOFF * scale:
            break
    # slow power-law ends are closed off analytically
    tails, tail_err = 0.0, 0.0
    for edge, inward in ((x_lo, 2.0), (x_hi, -2.0)):
        if magnitude(edge) >= SEMI_INFINITE_CUTOFF * scale:
            tail, err = _edge_tail(transformed, edge, inward)
            tails += tail
            tail_err += err
    logger.debug(f"Semi-infinite integral truncated to x in [{x_lo:.0f}, {x_hi:.0f}], edge tails {tails:.3e}")
    value, err = _quad(lambda x: float(transformed(x)), x_lo, x_hi, abs_tol, limit, None)
    return value + tails, err + tail_err


def integrate(func: Callable, spec: QuadratureSpec, domain: Tuple[float, float],
              singular_points: Optional[Sequence[float]] = None) -> Tuple[Union[float, complex], float]:
    """
    One-dimensional quadrature dispatching on spec.rule.

    - periodic-trapezoid: one period given by domain; func must be vectorized.
    - adaptive-interval: scipy's adaptive Gauss-Kronrod on domain; integrable log
      singularities at the ends or at singular_points are handled; complex values
      are integrated part by part.
    - transformed-semi-infinite: domain (a, inf) mapped by u = a + e^x, truncated
      where the transformed integrand falls below 1e-16 of its peak; an end still
      above that at |x| = 700 is closed with an exponential tail fitted to its
      last steps.

    Args:
        func (Callable): Integrand.
        spec (QuadratureSpec): Rule, tolerance and node budget.
        domain (tuple): Integration bounds.
        singular_points (Sequence[float], optional): Interior points needing care.

    Returns:
        tuple: (value, err_est).

    Raises:
        QuadratureError: On non-convergence, carrying the best estimate.
    """
    a, b = domain
    limit = max(50, spec.max_nodes // 21)
    if spec.rule == "periodic-trapezoid":
        mean, err = periodic_mean(func, spec.abs_tol, spec.max_nodes, domain=(a, b))
        scaled = mean * (b - a)
        value = complex(scaled) if np.iscomplexobj(scaled) else float(scaled)
        return value, err * (b - a)
    if spec.rule == "adaptive-interval":
        return _adaptive(func, a, b, spec.abs_tol, limit, singular_points)
    if not math.isinf(b):
        raise RangeError("transformed-semi-infinite needs an infinite upper bound", "special_functions", "integrate")
    return _semi_infinite(func, a, spec.abs_tol, limit)
