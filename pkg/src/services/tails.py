import math
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
from scipy import optimize

from models.pydantic_classes import AFit, CumulantReport, SaddleSolution, TailEstimate
from src.config import (MOMENT_PRIME_CUTOFF, MODEL_PRIME_CAP, SADDLE_DAMPING, SADDLE_KAPPA_MAX, SADDLE_MAX_ITERATIONS,
                        SADDLE_MAX_REJECTED)
from src.services import moments
from src.services.random_model import get_model, model_config
from src.utils.errors import RangeError
from src.utils.logger import setup_logger
from src.utils.parallel import chunked_map

logger = setup_logger(__name__)

_MC_MIN_EXPECTED = 10.0


@lru_cache(maxsize=256)
def _cumulants(sigma: float, k: float, family: str, P_quad: int) -> CumulantReport:
    return moments.cumulants(sigma, k, family=family, P_quad=P_quad)


def _initial_guess(sigma: float, tau: float, family: str, P_quad: int) -> float:
    if sigma < 1.0 and tau > math.e:
        g2 = moments.asymptotic_constants(sigma).g2
        guess = g2 * (tau * math.log(tau)) ** (sigma / (1.0 - sigma))
    else:
        guess = tau / _cumulants(sigma, 0.0, family, P_quad).M2
    return min(max(guess, 1e-6), SADDLE_KAPPA_MAX)


def solve_saddle(sigma: float, tau: float, family: str = "modulus",
                 P_quad: int = MOMENT_PRIME_CUTOFF) -> SaddleSolution:
    """
    Unique kappa > 0 with M'(kappa) = tau.

    Damped Newton inside a shrinking bracket [k_lo, k_hi] with M'(k_lo) < tau < M'(k_hi);
    a Newton step leaving the bracket is pulled back by the damping factor, and after
    three such rejections brentq finishes on the bracket.

    Args:
        sigma (float): Abscissa.
        tau (float): Level, tau >= 0.1.
        family (str): "modulus" or "argument".
        P_quad (int): Quadrature cutoff of the cumulants.

    Returns:
        SaddleSolution: kappa, M(kappa), M''(kappa) and the final residual.

    Raises:
        RangeError: If tau < 0.1 or kappa would exceed 1e3.
    """
    if tau < 0.1:
        raise RangeError(f"tau = {tau:g} below 0.1", "tails", "solve_saddle")
    k_lo, k_hi = 0.0, SADDLE_KAPPA_MAX
    top = _cumulants(sigma, k_hi, family, P_quad)
    if top.M1 <= tau:
        raise RangeError(f"kappa({tau:g}) exceeds {SADDLE_KAPPA_MAX:g} (M'({SADDLE_KAPPA_MAX:g}) = {top.M1:.4f})",
                         "tails", "solve_saddle")
    tolerance = 1e-9 * max(1.0, tau)
    k = _initial_guess(sigma, tau, family, P_quad)
    rejected, iterations = 0, 0
    report = _cumulants(sigma, k, family, P_quad)
    while iterations < SADDLE_MAX_ITERATIONS:
        iterations += 1
        residual = report.M1 - tau
        if residual < 0:
            k_lo = max(k_lo, k)
        else:
            k_hi = min(k_hi, k)
        if abs(residual) <= 1e-3 * tolerance:
            break
        step = -residual / report.M2
        candidate = k + step
        if not k_lo < candidate < k_hi:
            rejected += 1
            bound = k_lo if candidate <= k_lo else k_hi
            candidate = k + SADDLE_DAMPING * (bound - k)
            logger.debug(f"Saddle step {iterations} left the bracket [{k_lo:.6g}, {k_hi:.6g}]; damped")
            if rejected >= SADDLE_MAX_REJECTED:
                candidate = optimize.brentq(lambda x: _cumulants(sigma, x, family, P_quad).M1 - tau,
                                            k_lo, k_hi, xtol=1e-14, rtol=4e-16)
                report = _cumulants(sigma, candidate, family, P_quad)
                k = candidate
                logger.debug(f"Saddle fell back to bisection after {rejected} rejected steps")
                break
        logger.debug(f"Saddle iteration {iterations}: k={candidate:.12g} residual={residual:.3e}")
        converged = abs(candidate - k) <= 1e-12 * max(1.0, k)
        k = candidate
        report = _cumulants(sigma, k, family, P_quad)
        if converged:
            break
    residual = abs(report.M1 - tau)
    if residual > tolerance:
        raise RangeError(f"saddle residual {residual:.2e} above {tolerance:.2e} after {iterations} iterations",
                         "tails", "solve_saddle")
    M_value = moments.M(sigma, k, P_quad, family=family).M.real
    return SaddleSolution(sigma=sigma, tau=tau, family=family, kappa=k, M_at_kappa=M_value,
                          M2_at_kappa=report.M2, residual=residual, newton_iters=iterations)


def rate_function(sigma: float, tau: float, family: str = "modulus", P_quad: int = MOMENT_PRIME_CUTOFF) -> float:
    """Legendre transform tau kappa(tau) - M(kappa(tau)); its tau-derivative is kappa(tau)."""
    solution = solve_saddle(sigma, tau, family, P_quad)
    return tau * solution.kappa - solution.M_at_kappa


def tail_probability_saddle(sigma: float, tau: float, family: str = "modulus",
                            P_quad: int = MOMENT_PRIME_CUTOFF) -> TailEstimate:
    """
    Saddle-point tail exp(M(kappa) - tau kappa)/(kappa sqrt(2 pi M''(kappa))).

    The (1 + O(kappa^(1-1/sigma) log kappa)) correction is not modeled; its scale is
    returned as correction_scale.

    Args:
        sigma (float): Abscissa.
        tau (float): Level, tau >= 1.
        family (str): "modulus" for log|zeta|, "argument" for arg zeta.
        P_quad (int): Quadrature cutoff.

    Returns:
        TailEstimate: p_saddle, kappa and correction_scale.
    """
    if tau < 1.0:
        raise RangeError(f"tau = {tau:g} below 1", "tails", "tail_probability_saddle")
    solution = solve_saddle(sigma, tau, family, P_quad)
    kappa = solution.kappa
    p = math.exp(solution.M_at_kappa - tau * kappa) / (kappa * math.sqrt(2.0 * math.pi * solution.M2_at_kappa))
    if not 0.0 < p < 1.0:
        logger.warning(f"Saddle tail {p:.3e} at tau={tau} outside (0, 1); the asymptotic regime is not reached")
    correction = kappa ** (1.0 - 1.0 / sigma) * math.log(kappa)
    return TailEstimate(sigma=sigma, tau=tau, family=family, kappa=kappa, p_saddle=p, correction_scale=correction)


def arg_tail_saddle(sigma: float, tau: float, P_quad: int = MOMENT_PRIME_CUTOFF) -> TailEstimate:
    """Saddle-point tail of arg zeta(sigma, X) above tau."""
    return tail_probability_saddle(sigma, tau, family="argument", P_quad=P_quad)


def tail_probability_mc(sigma: float, tau: float, n: int, seed: int, family: str = "modulus", lower: bool = False,
                        tail_mode: str = "gaussian-compensate", prime_cutoff: Optional[int] = None,
                        cap: int = MODEL_PRIME_CAP) -> TailEstimate:
    """
    Monte Carlo tail P(log|zeta(sigma, X)| > tau) by plain counting over n model draws.

    lower=True counts draws below tau instead. Chunk counts are integers, so the
    estimate does not depend on the worker count.

    Args:
        sigma (float): Abscissa.
        tau (float): Level.
        n (int): Draw count, n <= 1e9.
        seed (int): Master seed.
        family (str): "modulus" or "argument".
        lower (bool): Count the lower tail.
        tail_mode (str): Model tail handling.
        prime_cutoff (int, optional): Model prime cutoff; defaults to the sd-driven choice.
        cap (int): Cap on the default prime cutoff.

    Returns:
        TailEstimate: p_mc with its binomial standard error.
    """
    if n < 1 or n > 10**9:
        raise RangeError(f"n = {n} outside [1, 1e9]", "tails", "tail_probability_mc")
    model = get_model(model_config(sigma, seed, tail_mode, prime_cutoff, cap))

    def count(lo: int, hi: int) -> int:
        log_modulus, argument = model.sample_block(lo, hi)
        values = (log_modulus if family == "modulus" else argument)[0]
        return int(np.count_nonzero(values < tau if lower else values > tau))

    hits = sum(chunked_map(count, 0, n, desc=f"tail MC tau={tau:g}"))
    p = hits / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    logger.info(f"MC tail sigma={sigma} tau={tau} n={n} seed={seed}: p={p:.6g} +- {stderr:.2g}")
    return TailEstimate(sigma=sigma, tau=tau, family=family, p_mc=p, mc_stderr=stderr, mc_samples=n)


def compare_tail(sigma: float, tau: float, n: int, seed: int, family: str = "modulus",
                 P_quad: int = MOMENT_PRIME_CUTOFF, tail_mode: str = "gaussian-compensate",
                 cap: int = MODEL_PRIME_CAP) -> TailEstimate:
    """
    Saddle tail with a Monte Carlo cross-estimate.

    MC is skipped (verdict "mc-unavailable") when fewer than 10 hits are expected;
    otherwise the two agree when they differ by at most max(3 stderr, 30% of p_saddle).
    """
    estimate = tail_probability_saddle(sigma, tau, family, P_quad)
    if n * estimate.p_saddle < _MC_MIN_EXPECTED:
        logger.info(f"Tail at tau={tau} too small for {n} draws; reporting the saddle value only")
        return estimate.model_copy(update={"verdict": "mc-unavailable"})
    mc = tail_probability_mc(sigma, tau, n, seed, family, tail_mode=tail_mode, cap=cap)
    gap = abs(mc.p_mc - estimate.p_saddle)
    verdict = "agree" if gap <= max(3.0 * mc.mc_stderr, 0.3 * estimate.p_saddle) else "disagree"
    return estimate.model_copy(update={"p_mc": mc.p_mc, "mc_stderr": mc.mc_stderr, "mc_samples": n,
                                       "verdict": verdict})


def large_deviation_scale(sigma: float, tau: float) -> float:
    """tau^(1/(1-sigma)) (log tau)^(sigma/(1-sigma))."""
    return tau ** (1.0 / (1.0 - sigma)) * math.log(tau) ** (sigma / (1.0 - sigma))


def fit_A(sigma: float, taus: Iterable[float], family: str = "modulus", P_quad: int = MOMENT_PRIME_CUTOFF) -> AFit:
    """
    Least-squares A(sigma) in -log p_saddle(tau) ~ A tau^(1/(1-sigma)) (log tau)^(sigma/(1-sigma)).

    The fit runs through the origin over the given taus (all above 1).

    Returns:
        AFit: A and its standard error.
    """
    taus = sorted(float(tau) for tau in taus)
    if len(taus) < 2 or taus[0] <= 1.0 or sigma >= 1.0:
        raise RangeError("fit_A needs sigma < 1 and at least two taus above 1", "tails", "fit_A")
    x = np.array([large_deviation_scale(sigma, tau) for tau in taus])
    y = np.array([-math.log(tail_probability_saddle(sigma, tau, family, P_quad).p_saddle) for tau in taus])
    A = float(np.dot(x, y) / np.dot(x, x))
    residuals = y - A * x
    stderr = float(math.sqrt(np.dot(residuals, residuals) / (len(taus) - 1) / np.dot(x, x)))
    logger.info(f"A({sigma}) fit over tau in [{taus[0]}, {taus[-1]}]: {A:.6g} +- {stderr:.2g}")
    return AFit(sigma=sigma, A=A, stderr=stderr, taus=taus)
