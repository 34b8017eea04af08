import math
from functools import lru_cache
from typing import Tuple, Union

import mpmath
import numpy as np
from scipy import special

from models.pydantic_classes import LogZetaValue
from src.config import (ARG_INITIAL_STEP, ARG_MAX_LEVELS, EM_BERNOULLI_TERMS, EM_MIN_TERMS,
                        NEAR_ZERO_THRESHOLD, ZETA_T_MAX, ZETA_TOL)
from src.utils.errors import NearZeroError, RangeError
from src.utils.logger import setup_logger
from src.utils.prime_table import PrimeTable, prime_powers

logger = setup_logger(__name__)

QUALITY_OK = 0
QUALITY_NEAR_ZERO = 1
QUALITY_PATH_REFINED = 2
QUALITY_NAMES = {QUALITY_OK: "ok", QUALITY_NEAR_ZERO: "near_zero", QUALITY_PATH_REFINED: "path_refined"}

_ANCHOR_SIGMA = 3.0
_CHUNK_ELEMENTS = 2**21
_MAX_TERMS = 2**26


@lru_cache(maxsize=1)
def _em_coefficients(order: int) -> np.ndarray:
    # B_{2k}/(2k)! for k = 1..order
    bernoulli = special.bernoulli(2 * order)
    return np.array([bernoulli[2 * k] / math.factorial(2 * k) for k in range(1, order + 1)])


def _check_window(s: np.ndarray, sigma_min: float, inclusive: bool, operation: str) -> None:
    re = s.real
    low_ok = re >= sigma_min if inclusive else re > sigma_min
    if not np.all(low_ok & (re <= _ANCHOR_SIGMA)) or np.any(np.abs(s.imag) > ZETA_T_MAX):
        bound = "[" if inclusive else "("
        raise RangeError(f"zeta needs re(s) in {bound}{sigma_min}, 3] and |im(s)| <= {ZETA_T_MAX:g}",
                         "zeta_eval", operation)
    if not np.all(np.isfinite(s)):
        raise RangeError("zeta arguments must be finite", "zeta_eval", operation)


def _main_sum(s: np.ndarray, terms: int) -> np.ndarray:
    total = np.zeros(s.shape, dtype=complex)
    block = max(256, _CHUNK_ELEMENTS // max(1, s.size))
    for start in range(1, terms, block):
        log_n = np.log(np.arange(start, min(start + block, terms), dtype=float))
        total += np.sum(np.exp(-np.multiply.outer(s, log_n)), axis=-1)
    return total


def _euler_maclaurin(s: np.ndarray, terms: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    coefficients = _em_coefficients(order + 1)
    log_N = math.log(terms)
    N_pow = np.exp(-s * log_N)
    value = _main_sum(s, terms) + terms * N_pow / (s - 1.0) + 0.5 * N_pow
    rising = s.copy()
    power = N_pow / terms
    remainder = np.zeros_like(value)
    for k in range(1, order + 2):
        term = coefficients[k - 1] * rising * power
        if k <= order:
            value += term
        else:
            remainder = np.abs(term)
        rising = rising * (s + 2 * k - 1) * (s + 2 * k)
        power = power / (terms * terms)
    return value, remainder


def zeta_many(s: Union[complex, np.ndarray], tol: float = ZETA_TOL, extended: bool = False) -> np.ndarray:
    """
    Riemann zeta at many points by Euler-Maclaurin summation.

    Every point of a batch shares one cutoff N = max(20, ceil(2 max|t|)); N doubles
    until the first omitted correction term is below tol relative to the value.
    Points with negative imaginary part are evaluated at their conjugate and
    conjugated back, so zeta(conj s) = conj zeta(s) holds exactly.

    Args:
        s (complex | np.ndarray): Evaluation points.
        tol (float): Relative tolerance, at least 1e-12.
        extended (bool): Allow re(s) >= 0.4 (contour tracking) instead of re(s) > 1/2.

    Returns:
        np.ndarray: zeta values, same shape as s.

    Raises:
        RangeError: If a point or tol lies outside the evaluation window.
    """
    if tol < 1e-12:
        raise RangeError(f"tol must be >= 1e-12, got {tol}", "zeta_eval", "zeta")
    points = np.atleast_1d(np.asarray(s, dtype=complex))
    _check_window(points, 0.4 if extended else 0.5, extended, "zeta")
    if points.size == 0:
        return points.copy()

    lower = points.imag < 0
    upper_points = np.where(lower, np.conj(points), points)
    terms = max(EM_MIN_TERMS, int(math.ceil(2.0 * float(np.max(upper_points.imag)))))
    while True:
        value, remainder = _euler_maclaurin(upper_points, terms, EM_BERNOULLI_TERMS)
        if np.all(remainder <= tol * np.maximum(np.abs(value), 1e-300)) or terms >= _MAX_TERMS:
            break
        terms *= 2
        logger.debug(f"Euler-Maclaurin cutoff doubled to {terms}")
    value = np.where(lower, np.conj(value), value)
    return value.reshape(np.shape(s)) if np.ndim(s) else value


def zeta(s: complex, tol: float = ZETA_TOL, extended: bool = False) -> complex:
    """
    zeta(s) for 1/2 < re(s) <= 3 and |im(s)| <= 1e7, relative error <= tol.

    Args:
        s (complex): Evaluation point.
        tol (float): Relative tolerance, at least 1e-12.
        extended (bool): Allow re(s) >= 0.4 for contour tracking.

    Returns:
        complex: zeta(s).
    """
    return complex(zeta_many(np.array([s], dtype=complex), tol, extended)[0])


def zeta_eta_oracle(s: complex, dps: int = 30) -> complex:
    """
    Independent zeta value from the alternating series: eta(s)/(1 - 2^(1-s)).
    """
    with mpmath.workdps(dps):
        s_mp = mpmath.mpc(s.real, s.imag)
        value = mpmath.altzeta(s_mp) / (1 - mpmath.power(2, 1 - s_mp))
        return complex(value)


def _path_nodes(sigma: float) -> np.ndarray:
    steps = int(math.ceil((_ANCHOR_SIGMA - sigma) / ARG_INITIAL_STEP - 1e-12))
    nodes = _ANCHOR_SIGMA - ARG_INITIAL_STEP * np.arange(steps + 1)
    nodes[-1] = sigma
    return nodes


class _ArgumentTracker:
    """Continues arg zeta along a horizontal path, bisecting steps whose increment reaches pi/2."""

    def __init__(self, t: float, tol: float):
        self.t = t
        self.tol = tol
        self.refined = False

    def _value(self, sigma: float) -> complex:
        value = zeta(complex(sigma, self.t), self.tol)
        if abs(value) < NEAR_ZERO_THRESHOLD:
            raise NearZeroError(f"|zeta| < {NEAR_ZERO_THRESHOLD:g} at {sigma}+{self.t}i",
                                point=complex(sigma, self.t), module="zeta_eval", operation="log_zeta_line")
        return value

    def increment(self, sigma_a: float, z_a: complex, sigma_b: float, z_b: complex, level: int = 0) -> float:
        step = float(np.angle(z_b / z_a))
        if abs(step) < math.pi / 2:
            return step
        if level >= ARG_MAX_LEVELS:
            raise NearZeroError(f"argument step did not settle after {ARG_MAX_LEVELS} bisections near "
                                f"{sigma_b}+{self.t}i", point=complex(sigma_b, self.t),
                                module="zeta_eval", operation="log_zeta_line")
        self.refined = True
        sigma_m = 0.5 * (sigma_a + sigma_b)
        z_m = self._value(sigma_m)
        return (self.increment(sigma_a, z_a, sigma_m, z_m, level + 1)
                + self.increment(sigma_m, z_m, sigma_b, z_b, level + 1))


def _check_line(sigma: float, t) -> None:
    if not 0.5 < sigma <= 1.0:
        raise RangeError(f"sigma must lie in (1/2, 1], got {sigma}", "zeta_eval", "log_zeta_line")
    if np.any(np.asarray(t) < 10):
        raise RangeError("log_zeta_line needs t >= 10", "zeta_eval", "log_zeta_line")


def log_zeta_line(sigma: float, t: float, tol: float = ZETA_TOL) -> LogZetaValue:
    """
    log zeta(sigma + it) with arg continued along the segment from 3 + it.

    The anchor value at 3 + it takes the principal argument (|zeta(3+it) - 1| < 1);
    steps of 0.25 in sigma are bisected while an increment reaches pi/2.

    Args:
        sigma (float): Abscissa in (1/2, 1].
        t (float): Height, t >= 10.
        tol (float): Relative tolerance of each zeta evaluation.

    Returns:
        LogZetaValue: log modulus, continued argument and quality flag.

    Raises:
        NearZeroError: If |zeta| < 1e-10 on the path or refinement is exhausted.
    """
    _check_line(sigma, t)
    nodes = _path_nodes(sigma)
    values = zeta_many(nodes + 1j * t, tol)
    tracker = _ArgumentTracker(t, tol)
    if np.any(np.abs(values) < NEAR_ZERO_THRESHOLD):
        raise NearZeroError(f"|zeta| < {NEAR_ZERO_THRESHOLD:g} on the path at t = {t}",
                            point=complex(sigma, t), module="zeta_eval", operation="log_zeta_line")
    argument = float(np.angle(values[0]))
    for i in range(len(nodes) - 1):
        argument += tracker.increment(nodes[i], values[i], nodes[i + 1], values[i + 1])
    return LogZetaValue(log_modulus=float(np.log(np.abs(values[-1]))), argument=argument,
                        quality="path_refined" if tracker.refined else "ok")


def log_zeta_line_many(sigma: float, t: np.ndarray, tol: float = ZETA_TOL) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Batched log_zeta_line: path nodes of every t are evaluated in one Euler-Maclaurin pass.

    Rows whose increments all stay below pi/2 are summed directly; the rest go through
    the bisecting tracker. Near-zero failures are flagged instead of raised.

    Args:
        sigma (float): Abscissa in (1/2, 1].
        t (np.ndarray): Heights, each >= 10.
        tol (float): Relative tolerance of each zeta evaluation.

    Returns:
        tuple: (log_modulus, argument, quality) arrays; failed rows hold NaN.
    """
    t = np.asarray(t, dtype=float)
    _check_line(sigma, t)
    nodes = _path_nodes(sigma)
    values = zeta_many(nodes[None, :] + 1j * t[:, None], tol)

    log_modulus = np.log(np.abs(values[:, -1]))
    increments = np.angle(values[:, 1:] / values[:, :-1])
    argument = np.angle(values[:, 0]) + np.sum(increments, axis=1)
    quality = np.full(t.size, QUALITY_OK, dtype=np.int8)

    tiny = np.any(np.abs(values) < NEAR_ZERO_THRESHOLD, axis=1)
    suspect = np.any(np.abs(increments) >= math.pi / 2, axis=1) & ~tiny
    quality[tiny] = QUALITY_NEAR_ZERO
    for row in np.flatnonzero(suspect):
        tracker = _ArgumentTracker(float(t[row]), tol)
        try:
            total = float(np.angle(values[row, 0]))
            for i in range(len(nodes) - 1):
                total += tracker.increment(nodes[i], values[row, i], nodes[i + 1], values[row, i + 1])
            argument[row] = total
            quality[row] = QUALITY_PATH_REFINED
        except NearZeroError:
            quality[row] = QUALITY_NEAR_ZERO
    failed = quality == QUALITY_NEAR_ZERO
    log_modulus[failed] = np.nan
    argument[failed] = np.nan
    return log_modulus, argument, quality


def dirichlet_R(sigma: float, t: Union[float, np.ndarray], Y: float, table: PrimeTable) -> Union[complex, np.ndarray]:
    """
    R_Y(sigma + it) = sum over p^n <= Y of 1/(n p^(n(sigma+it))).

    Args:
        sigma (float): Abscissa.
        t (float | np.ndarray): Height(s).
        Y (float): Prime-power bound, at most table.limit.
        table (PrimeTable): Prime table.

    Returns:
        complex | np.ndarray: R_Y at each t.
    """
    powers = prime_powers(table, Y)
    log_v = np.log(powers.values.astype(float))
    weights = np.exp(-sigma * log_v) / powers.exponents
    heights = np.atleast_1d(np.asarray(t, dtype=float))
    lower = heights < 0
    magnitude = np.abs(heights)
    result = np.empty(heights.shape, dtype=complex)
    block = max(1, _CHUNK_ELEMENTS // max(1, log_v.size))
    for start in range(0, heights.size, block):
        chunk = magnitude[start:start + block]
        result[start:start + block] = np.sum(weights * np.exp(-1j * np.multiply.outer(chunk, log_v)), axis=-1)
    result = np.where(lower, np.conj(result), result)
    return complex(result[0]) if np.ndim(t) == 0 else result
