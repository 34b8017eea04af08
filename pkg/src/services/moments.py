import math
from functools import lru_cache
from typing import List, Sequence, Tuple

import mpmath
import numpy as np
from numpy.polynomial import Polynomial

from models.pydantic_classes import (AsymptoticConstants, CharacteristicEstimate, CumulantReport, DecayRatio,
                                     MomentReport, QuadratureSpec)
from src.config import (CHARFUN_TRUNCATION_CONSTANT, LOG_SERIES_BELOW, MOMENT_PRIME_CUTOFF, MOMENT_TAIL_ORDER,
                        MOMENT_Z_MAX, PERIODIC_ABS_TOL, PERIODIC_MAX_NODES, PHI_RAND_Y_DEFAULT, PRIME_FACTOR_Z_MAX,
                        SEMI_INFINITE_ABS_TOL)
from src.utils.errors import QuadratureError, RangeError
from src.utils.logger import setup_logger
from src.utils.parallel import ordered_map, tree_sum
from src.utils.prime_table import get_prime_table, log_integral_tail, prime_powers, prime_zeta_tail
from src.utils.special_functions import integrate, log_I0_derivatives, periodic_mean

logger = setup_logger(__name__)

FAMILIES = ("modulus", "argument")

# (alpha, beta) = (a0 z, b0 z) per family: E[(1 - X r)^-alpha (1 - conj(X) r)^-beta]
_FAMILY_PARAMETERS = {"modulus": (0.5, 0.5), "argument": (-0.5j, 0.5j)}
_GROUP_EDGES = (0, 25, 168, 1229, 9592)
_GROUP_SIZE = 2**14


def _check_family(family: str, operation: str) -> None:
    if family not in FAMILIES:
        raise RangeError(f"unknown family {family!r}", "moments", operation)


def _weights(family: str, radius: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    Per-prime log-factor along the circle: -log|1 - r e^(i theta)| or its argument counterpart.
    """
    if family == "modulus":
        return -0.5 * np.log1p(radius * radius - 2.0 * radius * np.cos(theta))
    return np.arctan2(radius * np.sin(theta), 1.0 - radius * np.cos(theta))


def _weight_range(family: str, radius: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if family == "modulus":
        return -np.log1p(radius), -np.log1p(-radius)
    bound = np.arcsin(radius)
    return -bound, bound


def _shift(family: str, radius: np.ndarray, z: complex) -> np.ndarray:
    # max over theta of Re(z w), keeps exp(z w - shift) <= 1
    low, high = _weight_range(family, radius)
    return z.real * (high if z.real > 0 else low)


def _factor_means(radius: np.ndarray, sigma_z: complex, family: str, orders: int,
                  abs_tol: float = PERIODIC_ABS_TOL, max_nodes: int = PERIODIC_MAX_NODES):
    """
    Shifted means E[w^j exp(z w - shift)] for j <= orders over a block of radii.

    Returns:
        tuple: (means of shape (orders + 1, n), shift (n,), err).
    """
    z = complex(sigma_z)
    shift = _shift(family, radius, z)

    def integrand(theta: np.ndarray) -> np.ndarray:
        w = _weights(family, radius[:, None], theta[None, :])
        e = np.exp(z * w - shift[:, None])
        stack = [e]
        for _ in range(orders):
            stack.append(stack[-1] * w)
        return np.stack(stack)

    try:
        means, err = periodic_mean(integrand, abs_tol, max_nodes)
    except QuadratureError as e:
        raise QuadratureError(f"per-prime factor at z = {z} did not converge", best_estimate=e.best_estimate,
                              err_est=e.err_est, module="moments", operation="prime_factor") from e
    return means, shift, err


def prime_factor(p: int, sigma: float, z: complex, weights: Sequence[int] = (0, 1, 2, 3),
                 family: str = "modulus") -> np.ndarray:
    """
    phi_p^(j)(z) = (1/2 pi) int (-L_p)^j exp(-z L_p) d theta with L_p = log|1 - e^(i theta) p^-sigma|.

    The argument family replaces -L_p by -Im Log(1 - e^(i theta) p^-sigma). Values
    above exp(709) overflow to inf; log_prime_factor stays finite.

    Args:
        p (int): A prime.
        sigma (float): Abscissa.
        z (complex): Exponent, |z| <= 1e4.
        weights (Sequence[int]): Derivative orders j in {0, 1, 2, 3}.
        family (str): "modulus" or "argument".

    Returns:
        np.ndarray: Complex values, one per requested weight.
    """
    _check_family(family, "prime_factor")
    if abs(z) > PRIME_FACTOR_Z_MAX:
        raise RangeError(f"|z| = {abs(z):g} exceeds {PRIME_FACTOR_Z_MAX:g}", "moments", "prime_factor")
    if any(j not in (0, 1, 2, 3) for j in weights):
        raise RangeError("weights must lie in {0, 1, 2, 3}", "moments", "prime_factor")
    radius = np.array([float(p) ** (-sigma)])
    means, shift, _ = _factor_means(radius, z, family, max(weights))
    return np.array([means[j, 0] for j in weights]) * np.exp(shift[0])


def log_prime_factor(p: int, sigma: float, z: complex, family: str = "modulus") -> complex:
    """log phi_p(z), finite for every |z| <= 1e4."""
    _check_family(family, "prime_factor")
    radius = np.array([float(p) ** (-sigma)])
    means, shift, _ = _factor_means(radius, z, family, 0)
    return complex(shift[0] + np.log(means[0, 0]))


def hypergeometric_factor(p: int, sigma: float, alpha: complex, beta: complex) -> complex:
    """
    E[(1 - X r)^-alpha (1 - conj(X) r)^-beta] = 2F1(alpha, beta; 1; r^2) with r = p^-sigma.

    Args:
        p (int): A prime (or any real > 1).
        sigma (float): Abscissa.
        alpha (complex): First exponent.
        beta (complex): Second exponent.

    Returns:
        complex: The factor.
    """
    x = float(p) ** (-2.0 * sigma)
    return complex(mpmath.hyp2f1(complex(alpha), complex(beta), 1, x))


def _log_series(c: List) -> List:
    """
    Coefficients d_1..d_n of log(sum_m c_m x^m) with c_0 = 1.

    m d_m = m c_m - sum_{j<m} j d_j c_(m-j). Works for scalars and Polynomials alike.
    """
    d = [None]
    for m in range(1, len(c)):
        acc = c[m] * m
        for j in range(1, m):
            acc = acc - d[j] * c[m - j] * j
        d.append(acc / m)
    return d[1:]


@lru_cache(maxsize=4)
def _tail_polynomials(family: str, order: int) -> Tuple[Polynomial, ...]:
    """
    d_m(z), m = 1..order, with log 2F1(a0 z, b0 z; 1; x) = sum_m d_m(z) x^m.
    """
    a0, b0 = _FAMILY_PARAMETERS[family]
    c = [Polynomial([1.0])]
    running = Polynomial([1.0 + 0j])
    for n in range(1, order + 1):
        j = n - 1
        running = running * Polynomial([j * j, j * (a0 + b0), a0 * b0])
        c.append(running / (math.factorial(n) ** 2))
    d = _log_series(c)
    return tuple(Polynomial(np.real(poly.coef)) for poly in d)


def _pair_log_series(alpha: complex, beta: complex, order: int) -> List[complex]:
    c = [1.0 + 0j]
    running = 1.0 + 0j
    for n in range(1, order + 1):
        running *= (n - 1 + alpha) * (n - 1 + beta)
        c.append(running / (math.factorial(n) ** 2))
    return _log_series(c)


def _tail_sums(sigma: float, P: int, order: int, tail_method: str) -> np.ndarray:
    """sum over p > P of p^(-2 m sigma) for m = 1..order."""
    table = get_prime_table(max(int(math.ceil(P)), 2))
    if tail_method == "prime_zeta":
        return np.array([prime_zeta_tail(2.0 * m * sigma, P, table) for m in range(1, order + 1)])
    if tail_method == "log_integral":
        return np.array([log_integral_tail(2.0 * m * sigma, P) for m in range(1, order + 1)])
    raise RangeError(f"unknown tail_method {tail_method!r}", "moments", "M")


def _groups(count: int) -> List[Tuple[int, int]]:
    edges = [edge for edge in _GROUP_EDGES if edge < count]
    start = edges[-1]
    bounds = list(zip(edges, edges[1:] + [min(count, start + _GROUP_SIZE)]))
    start = bounds[-1][1]
    while start < count:
        bounds.append((start, min(count, start + _GROUP_SIZE)))
        start = bounds[-1][1]
    return bounds


def _prime_sums(sigma: float, z: complex, family: str, orders: int, P: int) -> Tuple[np.ndarray, float, int]:
    """
    Sums over p <= P of log phi_p(z) and of the per-prime cumulants k1..k_orders.

    Returns:
        tuple: (array [sum log phi, sum k1, ...], quadrature error, prime count).
    """
    primes = get_prime_table(max(int(math.ceil(P)), 2)).primes_up_to(P)
    radius_all = np.exp(-sigma * np.log(primes.astype(float)))

    def group_sum(bounds: Tuple[int, int]):
        lo, hi = bounds
        radius = radius_all[lo:hi]
        means, shift, err = _factor_means(radius, z, family, orders)
        base = means[0]
        rho = [means[j] / base for j in range(1, orders + 1)]
        terms = [shift + np.log(base)]
        if orders >= 1:
            terms.append(rho[0])
        if orders >= 2:
            terms.append(rho[1] - rho[0] ** 2)
        if orders >= 3:
            terms.append(rho[2] - 3.0 * rho[0] * rho[1] + 2.0 * rho[0] ** 3)
        low, high = _weight_range(family, radius)
        reach = float(np.max(np.maximum(np.abs(low), np.abs(high))))
        group_err = err * (hi - lo) / float(np.min(np.abs(base))) * (1.0 + reach) ** orders
        return np.array([np.sum(term) for term in terms]), group_err

    results = ordered_map(group_sum, _groups(primes.size))
    total = tree_sum([part for part, _ in results])
    return total, float(sum(err for _, err in results)), int(primes.size)


def _analytic_tail(sigma: float, z: complex, family: str, P: int, derivative: int, tail_method: str):
    """
    Tail over p > P of the derivative-th z-derivative of sum log phi_p(z), and its bound.
    """
    polys = _tail_polynomials(family, MOMENT_TAIL_ORDER + 1)
    sums = _tail_sums(sigma, P, MOMENT_TAIL_ORDER + 1, tail_method)
    values = [poly.deriv(derivative)(z) if derivative else poly(z) for poly in polys]
    tail = complex(np.sum(np.array(values[:-1]) * sums[:-1]))
    bound = 2.0 * abs(values[-1]) * sums[-1]
    if tail_method == "log_integral":
        exact = _tail_sums(sigma, P, 1, "prime_zeta")[0]
        bound += abs(values[0]) * abs(sums[0] - exact)
    return tail, float(bound)


def _check_z(z: complex, operation: str) -> None:
    if abs(z) > MOMENT_Z_MAX:
        raise RangeError(f"|z| = {abs(z):g} exceeds the desk range {MOMENT_Z_MAX:g}", "moments", operation)


def M(sigma: float, z: complex, P_quad: int = MOMENT_PRIME_CUTOFF, tail_method: str = "prime_zeta",
      family: str = "modulus") -> MomentReport:
    """
    Log-moment M(z) = log E|zeta(sigma, X)|^z (or log E exp(z arg) for the argument family).

    Primes up to P_quad are integrated one by one; the primes above contribute
    sum_m d_m(z) sum_{p>P} p^(-2 m sigma) with d_m the coefficients of
    log 2F1(alpha, beta; 1; x), summed through exact prime-zeta tails (or the
    logarithmic-integral approximation when tail_method="log_integral").

    Args:
        sigma (float): Abscissa in (1/2, 1].
        z (complex): Exponent, |z| <= 1e3.
        P_quad (int): Quadrature cutoff.
        tail_method (str): "prime_zeta" or "log_integral".
        family (str): "modulus" or "argument".

    Returns:
        MomentReport: M, its tail bound and quadrature error.
    """
    _check_family(family, "M")
    _check_z(z, "M")
    z = complex(z)
    sums, quad_err, count = _prime_sums(sigma, z, family, 0, P_quad)
    tail, bound = _analytic_tail(sigma, z, family, P_quad, 0, tail_method)
    if abs(z) * P_quad ** (-sigma) > 0.5:
        logger.warning(f"|z| P^-sigma = {abs(z) * P_quad ** (-sigma):.2f}: tail series converges slowly")
    value = complex(sums[0]) + tail
    if z.imag == 0.0:
        value = complex(value.real, 0.0)
    return MomentReport(sigma=sigma, z=z, family=family, M=value, per_prime_terms_used=count,
                        tail_bound=bound, quad_err=quad_err)


def M_arg(sigma: float, z: complex, P_quad: int = MOMENT_PRIME_CUTOFF,
          tail_method: str = "prime_zeta") -> MomentReport:
    """log E exp(z arg zeta(sigma, X)); even in real z."""
    return M(sigma, z, P_quad, tail_method, family="argument")


def cumulants(sigma: float, k: float, family: str = "modulus", P_quad: int = MOMENT_PRIME_CUTOFF,
              tail_method: str = "prime_zeta") -> CumulantReport:
    """
    M'(k), M''(k) and M'''(k) at real k >= 0.

    Per prime, with rho_j = phi^(j)/phi: M1 sums rho_1, M2 sums rho_2 - rho_1^2 and
    M3 sums rho_3 - 3 rho_1 rho_2 + 2 rho_1^3. The tail uses derivatives of the
    same log-2F1 polynomials as M.

    Args:
        sigma (float): Abscissa.
        k (float): Real point, 0 <= k <= 1e3.
        family (str): "modulus" or "argument".
        P_quad (int): Quadrature cutoff.
        tail_method (str): As for M.

    Returns:
        CumulantReport: M1, M2, M3 and an error estimate.
    """
    _check_family(family, "cumulants")
    if k < 0 or k > MOMENT_Z_MAX:
        raise RangeError(f"k = {k:g} outside [0, {MOMENT_Z_MAX:g}]", "moments", "cumulants")
    sums, quad_err, _ = _prime_sums(sigma, complex(k), family, 3, P_quad)
    values, err = [], quad_err
    for order in (1, 2, 3):
        tail, bound = _analytic_tail(sigma, complex(k), family, P_quad, order, tail_method)
        values.append(float(sums[order].real + tail.real))
        err += bound
    return CumulantReport(sigma=sigma, k=float(k), family=family, M1=values[0], M2=values[1], M3=values[2], err=err)


def phi_rand(sigma: float, u: float, v: float, Y: float = PHI_RAND_Y_DEFAULT,
             C: float = CHARFUN_TRUNCATION_CONSTANT, tail: bool = False) -> CharacteristicEstimate:
    """
    Phi^rand(u, v) = E exp(i u log|zeta(sigma, X)| + i v arg zeta(sigma, X)), product over p <= Y.

    The reported error is the truncation bound C (|u| + |v|)/Y^(sigma - 1/2). With
    tail=True the primes above Y are folded in through the joint 2F1 series and the
    error becomes that series' remainder.

    Args:
        sigma (float): Abscissa.
        u (float): Log-modulus frequency, |u| <= 1e3.
        v (float): Argument frequency, |v| <= 1e3.
        Y (float): Product cutoff.
        C (float): Truncation constant.
        tail (bool): Include the primes above Y.

    Returns:
        CharacteristicEstimate: The value and its truncation error.
    """
    if abs(u) > MOMENT_Z_MAX or abs(v) > MOMENT_Z_MAX:
        raise RangeError("|u| and |v| must not exceed 1e3", "moments", "phi_rand")
    primes = get_prime_table(max(int(Y) + 1, 2)).primes_up_to(Y)
    radius_all = np.exp(-sigma * np.log(primes.astype(float)))

    def group_log(bounds: Tuple[int, int]) -> complex:
        radius = radius_all[bounds[0]:bounds[1]]

        def integrand(theta: np.ndarray) -> np.ndarray:
            phase = (u * _weights("modulus", radius[:, None], theta[None, :])
                     + v * _weights("argument", radius[:, None], theta[None, :]))
            return np.exp(1j * phase)

        try:
            means, _ = periodic_mean(integrand, PERIODIC_ABS_TOL, PERIODIC_MAX_NODES)
        except QuadratureError as e:
            raise QuadratureError(f"characteristic factor at (u, v) = ({u}, {v}) did not converge",
                                  best_estimate=e.best_estimate, err_est=e.err_est,
                                  module="moments", operation="phi_rand") from e
        return complex(np.sum(np.log(means.astype(complex))))

    log_value = tree_sum(ordered_map(group_log, _groups(primes.size)))
    error = C * (abs(u) + abs(v)) / Y ** (sigma - 0.5)
    if tail:
        alpha, beta = (1j * u + v) / 2.0, (1j * u - v) / 2.0
        d = _pair_log_series(alpha, beta, MOMENT_TAIL_ORDER + 1)
        sums = _tail_sums(sigma, int(Y), MOMENT_TAIL_ORDER + 1, "prime_zeta")
        log_value += complex(np.sum(np.array(d[:-1]) * sums[:-1]))
        error = 2.0 * abs(d[-1]) * sums[-1]
    value = complex(np.exp(log_value))
    if u == 0.0 and v == 0.0:
        value = 1.0 + 0j
    return CharacteristicEstimate(sigma=sigma, u=u, v=v, value=value, error=float(error), error_kind="truncation")


def _log_integrand(log_numerator, power: float):
    def integrand(u):
        u = float(u)
        if u <= 0.0:
            return 0.0
        return math.exp(log_numerator(u) - power * math.log(u))
    return integrand


def _log_f(u: float) -> float:
    if u < LOG_SERIES_BELOW:
        # log I0(u) = u^2/4 - u^4/64 + ..., kept in log space so tiny u does not underflow
        return 2.0 * math.log(u) - math.log(4.0) + math.log1p(-u * u / 16.0)
    f, _, _, _ = log_I0_derivatives(u)
    return math.log(f) if f > 0 else -math.inf


def _log_f_prime(u: float) -> float:
    if u < LOG_SERIES_BELOW:
        return math.log(0.5 * u) + math.log1p(-u * u / 8.0)
    _, f1, _, _ = log_I0_derivatives(u)
    return math.log(f1) if f1 > 0 else -math.inf


def g2_from_g1(sigma: float, g1: float) -> float:
    return (sigma / ((1.0 - sigma) * g1)) ** (sigma / (1.0 - sigma))


def asymptotic_constants(sigma: float) -> AsymptoticConstants:
    """
    g0 = int f(u)/u^(1/sigma+1) du, g1 = int f'(u)/u^(1/sigma) du with f = log I0, and
    g2 = (sigma/((1 - sigma) g1))^(sigma/(1 - sigma)).

    Args:
        sigma (float): Abscissa in (1/2, 1).

    Returns:
        AsymptoticConstants: g0, g1, g2 with quadrature errors; A_fit is left empty.
    """
    if not 0.5 < sigma < 1.0:
        raise RangeError("asymptotic constants need 1/2 < sigma < 1", "moments", "asymptotic_constants")
    spec = QuadratureSpec(rule="transformed-semi-infinite", abs_tol=SEMI_INFINITE_ABS_TOL)
    try:
        g0, g0_err = integrate(_log_integrand(_log_f, 1.0 / sigma + 1.0), spec, (0.0, math.inf))
        g1, g1_err = integrate(_log_integrand(_log_f_prime, 1.0 / sigma), spec, (0.0, math.inf))
    except QuadratureError as e:
        raise QuadratureError(f"g-constant integral failed at sigma = {sigma}", best_estimate=e.best_estimate,
                              err_est=e.err_est, module="moments", operation="asymptotic_constants") from e
    g2 = g2_from_g1(sigma, g1)
    # the same closed form through logarithms
    exponent = sigma / (1.0 - sigma)
    g2_log = math.exp(exponent * (math.log(sigma) - math.log1p(-sigma) - math.log(g1)))
    logger.info(f"Asymptotic constants at sigma={sigma}: g0={g0:.10f} g1={g1:.10f} g2={g2:.10f}")
    return AsymptoticConstants(sigma=sigma, g0=g0, g0_err=g0_err, g1=g1, g1_err=g1_err, g2=g2,
                               g2_residual=abs(g2 - g2_log))


def decay_ratio(sigma: float, k: float, t: float, P_quad: int = MOMENT_PRIME_CUTOFF) -> DecayRatio:
    """
    |E|zeta(sigma, X)|^(k + it)| / E|zeta(sigma, X)|^k beside the envelope exp(-|t|^(1/sigma - 1)).
    """
    shifted = M(sigma, complex(k, t), P_quad).M
    base = M(sigma, complex(k, 0.0), P_quad).M
    ratio = math.exp((shifted - base).real)
    return DecayRatio(sigma=sigma, k=k, t=t, ratio=ratio, envelope=math.exp(-abs(t) ** (1.0 / sigma - 1.0)))


def R_moment(sigma: float, Y: float, k: int) -> float:
    """
    Exact E|R_Y(sigma, X)|^(2k) for k in {1, 2}.

    R_Y = sum_p g_p with independent g_p = sum_n X(p)^n/(n p^(n sigma)). With
    v_p = E|g_p|^2, E|R_Y|^4 = sum_p E|g_p|^4 + 2((sum v_p)^2 - sum v_p^2), and
    E|g_p|^4 is the squared norm of the autocorrelation of g_p's coefficients.
    """
    if k not in (1, 2):
        raise RangeError("R_moment is exact for k in {1, 2} only", "moments", "R_moment")
    powers = prime_powers(get_prime_table(max(int(Y) + 1, 2)), Y)
    coefficients = {}
    for p, n, value in zip(powers.primes.tolist(), powers.exponents.tolist(), powers.values.tolist()):
        coefficients.setdefault(p, {})[n] = float(value) ** (-sigma) / n
    variances, fourth = [], []
    for by_exponent in coefficients.values():
        a = np.zeros(max(by_exponent) + 1)
        for n, c in by_exponent.items():
            a[n] = c
        variances.append(float(np.sum(a * a)))
        fourth.append(float(np.sum(np.correlate(a, a, mode="full") ** 2)))
    total = math.fsum(variances)
    if k == 1:
        return total
    return math.fsum(fourth) + 2.0 * (total * total - math.fsum(v * v for v in variances))
