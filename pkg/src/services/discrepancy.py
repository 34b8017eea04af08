import math
import os
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from models.pydantic_classes import DecayTrendReport, DiscrepancyReport, LineWindow, ModelConfig, Rectangle
from src.config import DISCREPANCY_GRID_DEFAULT, DISCREPANCY_STAT_CONSTANT, MODEL_PRIME_CAP
from src.services.empirical import Ecdf2D, resolve_backend, sample_line
from src.services.random_model import get_model, model_config
from src.utils.errors import CacheError, RangeError
from src.utils.logger import setup_logger
from src.utils.sample_cache import KIND_MODEL, model_cache_path, read_header, read_samples, write_samples

logger = setup_logger(__name__)

_EDGE = 1e308


def model_ecdf(cfg: ModelConfig, n: int, cache_dir: Optional[str] = None) -> Ecdf2D:
    """
    ECDF of n draws of log zeta(sigma, X), reusing a cache file when its header matches.

    A cache holding at least n draws for the same (sigma, P, seed) is read and cut to
    its first n records; otherwise the draws are computed and the cache rewritten.

    Args:
        cfg (ModelConfig): Model instance.
        n (int): Draw count, n <= 1e8.
        cache_dir (str, optional): Cache directory; no caching when None.

    Returns:
        Ecdf2D: The model ECDF.

    Raises:
        CacheError: A matching cache file is corrupt.
    """
    if not 1 <= n <= 10**8:
        raise RangeError(f"n = {n} outside [1, 1e8]", "discrepancy", "model_ecdf")
    path = model_cache_path(cache_dir, cfg.sigma, cfg.prime_cutoff, cfg.master_seed, cfg.tail_mode) if cache_dir else None
    if path and os.path.exists(path):
        header = read_header(path)
        if (header.kind == KIND_MODEL and header.sigma == cfg.sigma and header.P == cfg.prime_cutoff
                and header.seed == cfg.master_seed and header.count >= n):
            _, records = read_samples(path)
            logger.info(f"Reusing {n} of {header.count} cached model draws from {path}")
            return Ecdf2D(records["log_modulus"][:n], records["argument"][:n])
        logger.info(f"Cache {path} does not cover n={n}; resampling")
    log_modulus, argument = get_model(cfg).sample(n, desc="model draws")
    if path:
        try:
            write_samples(path, cfg.sigma, cfg.prime_cutoff, cfg.master_seed, log_modulus, argument)
        except CacheError as e:
            logger.warning(f"Model draws not cached: {e}")
    return Ecdf2D(log_modulus, argument)


def quantile_edges(values: np.ndarray, grid: int) -> np.ndarray:
    """grid + 1 cell edges at the marginal quantiles i/grid, outer edges pushed to +-1e308."""
    inner = np.quantile(values, np.arange(1, grid) / grid)
    return np.concatenate(([-_EDGE], inner, [_EDGE]))


def shared_edges(*ecdfs: Ecdf2D, grid: int = DISCREPANCY_GRID_DEFAULT) -> Tuple[np.ndarray, np.ndarray]:
    """Quantile edges of the pooled samples of several ECDFs."""
    x = np.concatenate([ecdf.x for ecdf in ecdfs])
    y = np.concatenate([ecdf.y for ecdf in ecdfs])
    return quantile_edges(x, grid), quantile_edges(y, grid)


def _max_rectangle(difference: np.ndarray):
    """
    Largest |sum| of difference over rectangles of whole cells, in O(g^3).

    For a row band [i1, i2) the column prefix sums c_j give every rectangle as
    c_j2 - c_j1, so the band's best is max c - min c.
    """
    g_x, g_y = difference.shape
    prefix = np.zeros((g_x + 1, g_y + 1))
    prefix[1:, 1:] = np.cumsum(np.cumsum(difference, axis=0), axis=1)
    best, where = -1.0, (0, 1, 0, 1)
    for i1 in range(g_x):
        band = prefix[i1 + 1:, :] - prefix[i1, :]
        spans = band.max(axis=1) - band.min(axis=1)
        row = int(np.argmax(spans))
        if spans[row] > best:
            j_max, j_min = int(np.argmax(band[row])), int(np.argmin(band[row]))
            best = float(spans[row])
            where = (i1, i1 + row + 1, min(j_max, j_min), max(j_max, j_min))
    return best, where


def discrepancy_estimate(emp: Ecdf2D, model: Ecdf2D, grid_resolution: int = DISCREPANCY_GRID_DEFAULT,
                         edges: Optional[Tuple[np.ndarray, np.ndarray]] = None, sigma: float = 0.0,
                         T: Optional[float] = None) -> DiscrepancyReport:
    """
    Largest |P_emp(R) - P_model(R)| over rectangles with corners on a marginal-quantile grid.

    Edges default to the pooled marginal quantiles; passing edges (see shared_edges)
    compares several pairs on one grid. stat_err = 2 (1/sqrt(n_emp) + 1/sqrt(n_model))
    is a heuristic two-sample budget; grid_slack is 4x the largest marginal cell
    probability of the pooled sample.

    Args:
        emp (Ecdf2D): Empirical sample.
        model (Ecdf2D): Model sample.
        grid_resolution (int): Cells per axis, 16 <= g <= 512.
        edges (tuple, optional): Precomputed (x_edges, y_edges).
        sigma (float): Abscissa, reported.
        T (float, optional): Window start, reported.

    Returns:
        DiscrepancyReport: D_hat, its errors and the maximizing rectangle.
    """
    if emp.count == 0 or model.count == 0:
        raise RangeError("both ECDFs need samples", "discrepancy", "discrepancy_estimate")
    if not 16 <= grid_resolution <= 512:
        raise RangeError(f"grid_resolution {grid_resolution} outside [16, 512]", "discrepancy",
                         "discrepancy_estimate")
    x_edges, y_edges = edges if edges is not None else shared_edges(emp, model, grid=grid_resolution)
    emp_hist, _, _ = np.histogram2d(emp.x, emp.y, bins=(x_edges, y_edges))
    model_hist, _, _ = np.histogram2d(model.x, model.y, bins=(x_edges, y_edges))
    difference = emp_hist / emp.count - model_hist / model.count
    D_hat, (i1, i2, j1, j2) = _max_rectangle(difference)

    pooled_x = np.concatenate([emp.x, model.x])
    pooled_y = np.concatenate([emp.y, model.y])
    cell_x = np.histogram(pooled_x, bins=x_edges)[0].max() / pooled_x.size
    cell_y = np.histogram(pooled_y, bins=y_edges)[0].max() / pooled_y.size
    stat_err = DISCREPANCY_STAT_CONSTANT * (1.0 / math.sqrt(emp.count) + 1.0 / math.sqrt(model.count))
    rect = Rectangle(a1=float(x_edges[i1]), a2=float(x_edges[i2]), b1=float(y_edges[j1]), b2=float(y_edges[j2])) \
        if j2 > j1 else None
    return DiscrepancyReport(sigma=sigma, T=T, D_hat=min(max(D_hat, 0.0), 1.0), grid_resolution=len(x_edges) - 1,
                             emp_count=emp.count, model_count=model.count, stat_err=stat_err,
                             grid_slack=4.0 * float(max(cell_x, cell_y)), rect_argmax=rect,
                             predicted_rate=predicted_rate(sigma, T) if T and sigma else None)


def predicted_rate(sigma: float, T: float) -> float:
    """Decay shape 1/(log T)^sigma for sigma < 1 and log log T/log T at sigma = 1."""
    log_T = math.log(T)
    if sigma >= 1.0:
        return math.log(log_T) / log_T
    return log_T ** (-sigma)


def decay_trend(sigma: float, T_list: Sequence[float], n: int, n_model: Optional[int] = None, seed: int = 0,
                grid_resolution: int = DISCREPANCY_GRID_DEFAULT, backend: str = "auto",
                tail_mode: str = "gaussian-compensate", cap: int = MODEL_PRIME_CAP,
                cache_dir: Optional[str] = None) -> DecayTrendReport:
    """
    D_hat at every T of T_list against one model sample, with the slope of log D_hat on log log T.

    The slope's 95% interval uses the Student t quantile with len(T_list) - 2 degrees
    of freedom.

    Args:
        sigma (float): Abscissa.
        T_list (Sequence[float]): Ascending window starts, at least three.
        n (int): Heights per window.
        n_model (int, optional): Model draws; defaults to n.
        seed (int): Seed of every window and of the model.
        grid_resolution (int): Cells per axis.
        backend (str): "auto", "full-zeta" or "dirichlet-RY".
        tail_mode (str): Model tail handling.
        cap (int): Cap on the model prime cutoff.
        cache_dir (str, optional): Model sample cache directory.

    Returns:
        DecayTrendReport: Per-T reports and the fitted slope.
    """
    T_list = [float(T) for T in T_list]
    if len(T_list) < 3 or any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise RangeError("T_list must be ascending with at least three values", "discrepancy", "decay_trend")
    model = model_ecdf(model_config(sigma, seed, tail_mode, cap=cap), n_model or n, cache_dir)
    reports = []
    for T in T_list:
        window = LineWindow(sigma=sigma, T=T, sample_count=n, seed=seed, backend=resolve_backend(T, backend))
        emp = Ecdf2D.from_samples(sample_line(window))
        report = discrepancy_estimate(emp, model, grid_resolution, sigma=sigma, T=T)
        logger.info(f"D_hat(sigma={sigma}, T={T:g}) = {report.D_hat:.4f} (stat_err {report.stat_err:.4f})")
        reports.append(report)
    x = np.log(np.log(T_list))
    y = np.log([max(report.D_hat, 1e-12) for report in reports])
    fit = stats.linregress(x, y)
    half_width = float(stats.t.ppf(0.975, len(T_list) - 2) * fit.stderr)
    decreasing = all(b.D_hat < a.D_hat for a, b in zip(reports, reports[1:]))
    return DecayTrendReport(sigma=sigma, reports=reports, slope=float(fit.slope),
                            slope_ci_low=float(fit.slope) - half_width, slope_ci_high=float(fit.slope) + half_width,
                            strictly_decreasing=decreasing)
