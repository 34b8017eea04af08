import math
from typing import Optional

import mpmath
import numpy as np
from scipy import special

from models.pydantic_classes import (ApproximationReport, CharacteristicEstimate, CharfunComparison,
                                     DiagonalMomentReport, DirichletMomentReport, LineSampleSet, LineWindow,
                                     PropComplexReport, Rectangle, SecondMomentReport, TailComparison)
from src.config import (AUTO_FULL_ZETA_BELOW, DIRICHLET_ENVELOPE_CONSTANT, EMPIRICAL_CHUNK,
                        EXCLUDED_WARNING_FRACTION, MAX_EXCLUDED_FRACTION, MIN_RETAINED_FRACTION, MODEL_PRIME_CAP)
from src.services import moments, tails
from src.services.random_model import _stream_generator, get_model, model_config, moment_oracle_small
from src.utils.errors import CacheError, DegenerateRestrictionError, DegenerateWindowError, RangeError
from src.utils.logger import setup_logger
from src.utils.parallel import chunked_map, concatenate
from src.utils.prime_table import get_prime_table
from src.utils.sample_cache import KIND_EMPIRICAL, read_samples, write_samples
from src.utils.zeta_eval import QUALITY_NEAR_ZERO, dirichlet_R, log_zeta_line_many

logger = setup_logger(__name__)

# Philox stream index reserved for t-sampling; model draws use indices from 0 up
_HEIGHT_STREAM = 2**63


def resolve_backend(T: float, backend: str = "auto") -> str:
    """'auto' evaluates zeta itself below T = 1e4 and switches to R_Y above."""
    if backend != "auto":
        return backend
    return "full-zeta" if T < AUTO_FULL_ZETA_BELOW else "dirichlet-RY"


def draw_heights(window: LineWindow) -> np.ndarray:
    """
    Sample heights in [T, 2T].

    The stratified sampler draws one uniform point in each of sample_count equal
    subintervals, so consecutive heights are less than 2T/n apart.
    """
    generator = _stream_generator(window.seed, _HEIGHT_STREAM)
    n, T = window.sample_count, window.T
    if window.sampler == "stratified":
        return T + T * (np.arange(n) + generator.random(n)) / n
    return T + T * generator.random(n)


def sample_line(window: LineWindow) -> LineSampleSet:
    """
    Evaluate log zeta(sigma + it) at the window's sampled heights.

    Near-zero failures are dropped and counted. Evaluation runs in fixed chunks of
    heights, so the result is identical for any worker count.

    Args:
        window (LineWindow): Sampling window.

    Returns:
        LineSampleSet: Retained samples.

    Raises:
        DegenerateWindowError: More than 5% of the heights were excluded.
    """
    t = draw_heights(window)
    logger.info(f"Sampling log zeta on sigma={window.sigma} T={window.T:g} n={window.sample_count} "
                f"backend={window.backend} seed={window.seed}")
    if window.backend == "full-zeta":
        def evaluate(lo: int, hi: int):
            return log_zeta_line_many(window.sigma, t[lo:hi])

        parts = chunked_map(evaluate, 0, t.size, EMPIRICAL_CHUNK, desc="zeta on the line")
        log_modulus = concatenate([part[0] for part in parts])
        argument = concatenate([part[1] for part in parts])
        quality = concatenate([part[2] for part in parts]).astype(np.int8)
    else:
        Y = window.resolved_Y
        table = get_prime_table(max(int(Y) + 1, 2))
        parts = chunked_map(lambda lo, hi: dirichlet_R(window.sigma, t[lo:hi], Y, table), 0, t.size,
                            EMPIRICAL_CHUNK, desc="R_Y on the line")
        values = concatenate(parts)
        log_modulus, argument = values.real.copy(), values.imag.copy()
        quality = np.zeros(t.size, dtype=np.int8)

    keep = quality != QUALITY_NEAR_ZERO
    excluded = int(t.size - np.count_nonzero(keep))
    fraction = excluded / t.size
    if fraction > MAX_EXCLUDED_FRACTION:
        raise DegenerateWindowError(f"{excluded} of {t.size} heights near a zero ({fraction:.1%})",
                                    "empirical", "sample_line")
    if fraction > EXCLUDED_WARNING_FRACTION:
        logger.warning(f"Excluded {fraction:.2%} of the heights as near-zero")
    return LineSampleSet(window=window, t=t[keep], log_modulus=log_modulus[keep], argument=argument[keep],
                         quality=quality[keep], excluded_count=excluded)


def save_line_samples(samples: LineSampleSet, path: str) -> None:
    """Persist a sample set in the binary cache format with empirical records."""
    window = samples.window
    bound = int(window.resolved_Y) if window.backend == "dirichlet-RY" else 0
    write_samples(path, window.sigma, bound, window.seed, samples.log_modulus, samples.argument, t=samples.t)


def load_line_samples(path: str, window: LineWindow) -> LineSampleSet:
    """
    Read a sample set back, checking that the cache matches window.

    Raises:
        CacheError: Wrong record kind, sigma or seed.
    """
    header, records = read_samples(path)
    if header.kind != KIND_EMPIRICAL or header.sigma != window.sigma or header.seed != window.seed:
        raise CacheError(f"{path} does not hold samples for sigma={window.sigma} seed={window.seed}",
                         "empirical", "sample_line")
    quality = np.zeros(header.count, dtype=np.int8)
    return LineSampleSet(window=window, t=records["t"].copy(), log_modulus=records["log_modulus"].copy(),
                         argument=records["argument"].copy(), quality=quality,
                         excluded_count=window.sample_count - header.count)


class Ecdf2D:
    """
    Empirical distribution of points (x, y), sorted lexicographically.

    Rectangles are open, matching the indicator of {a1 < x < a2, b1 < y < b2}.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        order = np.lexsort((y, x))
        self.x = np.asarray(x, dtype=float)[order]
        self.y = np.asarray(y, dtype=float)[order]

    @classmethod
    def from_samples(cls, samples: LineSampleSet) -> "Ecdf2D":
        return cls(samples.log_modulus, samples.argument)

    @property
    def count(self) -> int:
        return int(self.x.size)

    def rectangle_prob(self, rect: Rectangle) -> float:
        lo = np.searchsorted(self.x, rect.a1, side="right")
        hi = np.searchsorted(self.x, rect.a2, side="left")
        column = self.y[lo:hi]
        inside = np.count_nonzero((column > rect.b1) & (column < rect.b2))
        return inside / self.count if self.count else 0.0


def _mean_with_stderr(values: np.ndarray):
    n = values.size
    mean = np.mean(values)
    if n < 2:
        return mean, 0.0
    spread = np.sum(np.abs(values - mean) ** 2) / (n - 1)
    return mean, float(math.sqrt(spread / n))


def phi_empirical(samples: LineSampleSet, u: float, v: float) -> CharacteristicEstimate:
    """
    Empirical characteristic function: mean of exp(i u log|zeta| + i v arg zeta) over retained samples.
    """
    if abs(u) > 1e3 or abs(v) > 1e3:
        raise RangeError("|u| and |v| must not exceed 1e3", "empirical", "phi_empirical")
    phase = u * samples.log_modulus + v * samples.argument
    value, stderr = _mean_with_stderr(np.exp(1j * phase))
    return CharacteristicEstimate(sigma=samples.window.sigma, u=u, v=v, value=complex(value), error=stderr,
                                  error_kind="stderr")


def charfun_comparison(samples: LineSampleSet, u: float, v: float, Y: Optional[float] = None) -> CharfunComparison:
    """
    Empirical against model characteristic function, the model truncated at Y (default (log T)^4).

    The comparison passes when the gap is within 3 (stderr + truncation bound).
    """
    window = samples.window
    Y = Y if Y is not None else window.resolved_Y
    empirical = phi_empirical(samples, u, v)
    model = moments.phi_rand(window.sigma, u, v, Y)
    gap = abs(empirical.value - model.value)
    tolerance = 3.0 * (empirical.error + model.error)
    return CharfunComparison(sigma=window.sigma, T=window.T, u=u, v=v, phi_empirical=empirical, phi_rand=model,
                             gap=gap, tolerance=tolerance, passed=gap <= tolerance)


def secondary_term(sigma: float, T: float) -> float:
    """(2 pi)^(2 sigma - 1) zeta(2 - 2 sigma)/(2 - 2 sigma) (2^(2 - 2 sigma) - 1) T^(1 - 2 sigma)."""
    if sigma >= 1.0:
        return 0.0
    w = 2.0 - 2.0 * sigma
    return ((2.0 * math.pi) ** (2.0 * sigma - 1.0) * float(mpmath.zeta(w)) / w
            * (2.0 ** w - 1.0) * T ** (1.0 - 2.0 * sigma))


def second_moment(sigma: float, T: float, n: int, seed: int = 0) -> SecondMomentReport:
    """
    Mean of |zeta(sigma + it)|^2 over [T, 2T] against zeta(2 sigma) plus the secondary term.

    Args:
        sigma (float): Abscissa in (1/2, 1].
        T (float): Window start, 2T <= 1e7.
        n (int): Number of heights.
        seed (int): Sampling seed.

    Returns:
        SecondMomentReport: mean_sq with its standard error, prediction and secondary term.
    """
    window = LineWindow(sigma=sigma, T=T, sample_count=n, seed=seed, backend="full-zeta")
    samples = sample_line(window)
    mean_sq, stderr = _mean_with_stderr(np.exp(2.0 * samples.log_modulus))
    prediction = float(special.zeta(2.0 * sigma))
    secondary = secondary_term(sigma, T)
    return SecondMomentReport(sigma=sigma, T=T, n=samples.count, mean_sq=float(mean_sq), mean_sq_stderr=stderr,
                              prediction=prediction, secondary_term=secondary,
                              residual=float(mean_sq) - prediction - secondary)


def approximation_bound(sigma: float, T: float, Y: float) -> float:
    """Y^(-(sigma - 1/2)/2) (log T)^3."""
    return Y ** (-(sigma - 0.5) / 2.0) * math.log(T) ** 3


def approximation_check(sigma: float, T: float, n: int, seed: int = 0,
                        Y: Optional[float] = None) -> ApproximationReport:
    """
    |log zeta(sigma + it) - R_Y(sigma + it)| on n sampled heights against the approximation bound.

    Y defaults to (log T)^4.
    """
    window = LineWindow(sigma=sigma, T=T, sample_count=n, seed=seed, backend="full-zeta", Y=Y)
    samples = sample_line(window)
    Y = window.resolved_Y
    table = get_prime_table(max(int(Y) + 1, 2))
    R = dirichlet_R(sigma, samples.t, Y, table)
    gaps = np.hypot(samples.log_modulus - R.real, samples.argument - R.imag)
    bound = approximation_bound(sigma, T, Y)
    return ApproximationReport(sigma=sigma, T=T, Y=Y, n=samples.count, bound=bound,
                               fraction_within=float(np.mean(gaps <= bound)), max_gap=float(np.max(gaps)))


def restriction_radius(sigma: float, T: float) -> float:
    """Radius (log T)^(1 - sigma)/log log T of the set A(T) where |R_Y(sigma + it)| stays small."""
    log_T = math.log(T)
    return log_T ** (1.0 - sigma) / math.log(log_T)


def prop_complex_check(sigma: float, T: float, z1: complex, z2: complex, n: int, n_model: Optional[int] = None,
                       seed: int = 0, Y: Optional[float] = None,
                       min_retained_fraction: float = MIN_RETAINED_FRACTION) -> PropComplexReport:
    """
    Restricted complex moment: mean of exp(z1 R_Y + z2 conj(R_Y)) over heights in A(T) against the model.

    A(T) keeps the heights with |R_Y(sigma + it)| <= (log T)^(1 - sigma)/log log T. The
    model mean uses draws meeting the same restriction so both sides estimate the same
    functional; the unrestricted model mean is reported beside it. lhs is the mean over
    retained heights and lhs_over_T their sum divided by n.

    Args:
        sigma (float): Abscissa.
        T (float): Window start.
        z1 (complex): Coefficient of R_Y, |z1| <= 5.
        z2 (complex): Coefficient of conj(R_Y), |z2| <= 5.
        n (int): Heights.
        n_model (int, optional): Model draws; defaults to n.
        seed (int): Seed of both sides.
        Y (float, optional): Dirichlet cutoff, default (log T)^4.
        min_retained_fraction (float): Smallest acceptable share of retained heights.

    Returns:
        PropComplexReport: Both sides with standard errors.

    Raises:
        DegenerateRestrictionError: A(T) keeps fewer than min_retained_fraction of the heights.
    """
    if abs(z1) > 5 or abs(z2) > 5:
        raise RangeError("|z1| and |z2| must not exceed 5", "empirical", "prop_complex_check")
    window = LineWindow(sigma=sigma, T=T, sample_count=n, seed=seed, backend="dirichlet-RY", Y=Y)
    samples = sample_line(window)
    Y = window.resolved_Y
    radius = restriction_radius(sigma, T)
    R_line = samples.log_modulus + 1j * samples.argument
    kept = np.abs(R_line) <= radius
    retained = float(np.mean(kept))
    if retained < min_retained_fraction:
        raise DegenerateRestrictionError(f"A(T) keeps {retained:.1%} of the heights, below "
                                         f"{min_retained_fraction:.0%}", "empirical", "prop_complex_check")
    line_values = np.exp(z1 * R_line[kept] + z2 * np.conj(R_line[kept]))
    lhs, lhs_stderr = _mean_with_stderr(line_values)

    n_model = n_model or n
    cfg = model_config(sigma, seed, "drop", prime_cutoff=max(int(Y) + 1, 2))
    R_model = get_model(cfg).sample_R(Y, n_model, desc="R_Y model draws")
    model_kept = np.abs(R_model) <= radius
    model_values = np.exp(z1 * R_model + z2 * np.conj(R_model))
    rhs, rhs_stderr = _mean_with_stderr(model_values[model_kept])
    logger.info(f"Restricted moment at sigma={sigma} T={T:g}: retained {retained:.1%} of heights and "
                f"{np.mean(model_kept):.1%} of model draws")
    return PropComplexReport(sigma=sigma, T=T, Y=Y, z1=z1, z2=z2, lhs=complex(lhs),
                             lhs_over_T=complex(np.sum(line_values) / samples.count), lhs_stderr=lhs_stderr,
                             rhs=complex(rhs), rhs_stderr=rhs_stderr, rhs_unrestricted=complex(np.mean(model_values)),
                             gap=float(abs(lhs - rhs)), retained_fraction=retained,
                             model_retained_fraction=float(np.mean(model_kept)))


def diagonal_moment_check(sigma: float, T: float, y: float, z: float, k: int, n: int,
                          seed: int = 0) -> DiagonalMomentReport:
    """
    Mean of |sum_{y <= p <= z} p^(-sigma - it)|^(2k) over [T, 2T] against k! (sum p^(-2 sigma))^k.

    With at most six primes in [y, z] and k <= 3 the exact random-model moment is
    reported too.
    """
    table = get_prime_table(max(int(z) + 1, 2))
    primes = table.primes_up_to(z)
    primes = primes[primes >= y]
    if primes.size == 0:
        raise RangeError(f"no primes in [{y}, {z}]", "empirical", "diagonal_moment_check")
    window = LineWindow(sigma=sigma, T=T, sample_count=n, seed=seed, backend="dirichlet-RY")
    t = draw_heights(window)
    log_p = np.log(primes.astype(float))
    weights = np.exp(-sigma * log_p)
    sums = np.exp(-1j * np.multiply.outer(t, log_p)) @ weights
    empirical, stderr = _mean_with_stderr(np.abs(sums) ** (2 * k))
    bound = math.factorial(k) * float(np.sum(weights ** 2)) ** k
    exact = moment_oracle_small(primes.tolist(), sigma, k) if primes.size <= 6 and k <= 3 else None
    return DiagonalMomentReport(sigma=sigma, T=T, y=y, z=z, k=k, empirical=float(empirical),
                                empirical_stderr=stderr, random_exact=exact, random_bound=bound)


def dirichlet_envelope(sigma: float, k: int, a: float = DIRICHLET_ENVELOPE_CONSTANT) -> float:
    """(a k^(1 - sigma)/(log k)^sigma)^(2k)."""
    return (a * k ** (1.0 - sigma) / math.log(k) ** sigma) ** (2 * k)


def dirichlet_moment(sigma: float, T: float, Y: float, k: int, n: int, seed: int = 0) -> DirichletMomentReport:
    """Mean of |R_Y(sigma + it)|^(2k) over [T, 2T] beside its envelope, k >= 2."""
    if k < 2:
        raise RangeError("dirichlet_moment needs k >= 2", "empirical", "dirichlet_moment")
    window = LineWindow(sigma=sigma, T=T, sample_count=n, seed=seed, backend="dirichlet-RY", Y=Y)
    samples = sample_line(window)
    modulus = np.hypot(samples.log_modulus, samples.argument)
    empirical, stderr = _mean_with_stderr(modulus ** (2 * k))
    return DirichletMomentReport(sigma=sigma, T=T, Y=Y, k=k, empirical=float(empirical), empirical_stderr=stderr,
                                 envelope=dirichlet_envelope(sigma, k))


def tail_comparison(samples: LineSampleSet, tau: float, direction: str = "modulus", n_model: int = 10**5,
                    seed: int = 0, tail_mode: str = "gaussian-compensate",
                    cap: int = MODEL_PRIME_CAP) -> TailComparison:
    """P_T(log|zeta| > tau) (or arg zeta > tau) on the line against the model tail."""
    values = samples.log_modulus if direction == "modulus" else samples.argument
    hits = values > tau
    p = float(np.mean(hits))
    model = tails.tail_probability_mc(samples.window.sigma, tau, n_model, seed, family=direction,
                                      tail_mode=tail_mode, cap=cap)
    return TailComparison(sigma=samples.window.sigma, T=samples.window.T, tau=tau, direction=direction,
                          p_empirical=p, p_empirical_stderr=math.sqrt(p * (1.0 - p) / samples.count),
                          p_model=model.p_mc, p_model_stderr=model.mc_stderr)
