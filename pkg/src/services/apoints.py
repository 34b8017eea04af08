import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt

from models.pydantic_classes import (ApointCensus, FunctionEstimate, LineWindow, LittlewoodRectangleReport,
                                     LittlewoodReport, Rectangle, WindingBlock)
from src.config import (DENSITY_MODEL_SAMPLES, LITTLEWOOD_STEP, MC_CHUNK, MODEL_PRIME_CAP, ON_CONTOUR_RETRIES,
                        ON_CONTOUR_SHIFT, ON_CONTOUR_THRESHOLD, ROOT_MAX_DEPTH, ROOT_TOLERANCE, WINDING_BLOCK_HEIGHT,
                        WINDING_INITIAL_MESH, WINDING_MAX_LEVELS, WINDING_STEP, ZETA_T_MAX)
from src.services.empirical import resolve_backend, sample_line
from src.services.random_model import get_model, model_config
from src.utils.errors import OnContourRootError, QuadratureError, RangeError, StepError
from src.utils.logger import setup_logger
from src.utils.parallel import chunked_map, ordered_map
from src.utils.zeta_eval import zeta_many

logger = setup_logger(__name__)

_NEWTON_STEP = 1e-5
_NEWTON_ITERATIONS = 50
_SPLIT_OFFSETS = (0.0, 0.013, -0.017, 0.029, -0.031)


def _check_rectangle(a: complex, sigma1: float, sigma2: float, T1: float, T2: float, operation: str) -> None:
    if a == 0:
        raise RangeError("a must be nonzero", "apoints", operation)
    if not 0.5 < sigma1 < sigma2 <= 3.0:
        raise RangeError(f"need 1/2 < sigma1 < sigma2 <= 3, got ({sigma1}, {sigma2})", "apoints", operation)
    if not 1.0 <= T1 < T2 <= ZETA_T_MAX:
        raise RangeError(f"need 1 <= T1 < T2 <= {ZETA_T_MAX:g}, got ({T1}, {T2})", "apoints", operation)


def _shifted(points: np.ndarray, a: complex, operation: str) -> np.ndarray:
    """zeta(s) - a at the points, refusing values within the on-contour threshold."""
    values = zeta_many(points, extended=True) - a
    close = np.abs(values) < ON_CONTOUR_THRESHOLD
    if close.any():
        point = complex(points[np.argmax(close)])
        raise OnContourRootError(f"|zeta(s) - a| below {ON_CONTOUR_THRESHOLD:g} at s = {point}", point,
                                 "apoints", operation)
    return values


def _arg_increments(start: np.ndarray, stop: np.ndarray, f_start: np.ndarray, f_stop: np.ndarray, a: complex,
                    operation: str) -> Tuple[np.ndarray, int]:
    """
    Continuous change of arg(zeta - a) along each segment [start_k, stop_k].

    Every segment whose principal increment reaches pi/2 is bisected, all such
    segments of one level sharing a single batched zeta evaluation.

    Returns:
        tuple: (increment per segment, number of bisections).
    """
    increments = np.zeros(start.size)
    owner = np.arange(start.size)
    refinements = 0
    for level in range(WINDING_MAX_LEVELS + 1):
        step = np.angle(f_stop / f_start)
        settled = np.abs(step) < 0.5 * math.pi
        np.add.at(increments, owner[settled], step[settled])
        if settled.all():
            return increments, refinements
        if level == WINDING_MAX_LEVELS:
            break
        keep = ~settled
        lo, hi, f_lo, f_hi, owner = start[keep], stop[keep], f_start[keep], f_stop[keep], owner[keep]
        mid = 0.5 * (lo + hi)
        f_mid = _shifted(mid, a, operation)
        refinements += int(mid.size)
        logger.debug(f"Contour level {level + 1}: bisected {mid.size} segments")
        start, stop = np.concatenate((lo, mid)), np.concatenate((mid, hi))
        f_start, f_stop = np.concatenate((f_lo, f_mid)), np.concatenate((f_mid, f_hi))
        owner = np.concatenate((owner, owner))
    point = complex(start[~settled][0])
    raise OnContourRootError(f"argument increment unresolved after {WINDING_MAX_LEVELS} levels near s = {point}",
                             point, "apoints", operation)


def _edge_count(length: float, initial_mesh: int) -> int:
    return max(initial_mesh, int(math.ceil(length / WINDING_STEP)))


def _contour(sigma1: float, sigma2: float, T1: float, T2: float, initial_mesh: int) -> np.ndarray:
    """Closed counter-clockwise polygon on the rectangle boundary; the last vertex repeats the first."""
    width, height = sigma2 - sigma1, T2 - T1
    n_h, n_v = _edge_count(width, initial_mesh), _edge_count(height, initial_mesh)
    bottom = np.linspace(sigma1, sigma2, n_h, endpoint=False) + 1j * T1
    right = sigma2 + 1j * np.linspace(T1, T2, n_v, endpoint=False)
    top = np.linspace(sigma2, sigma1, n_h, endpoint=False) + 1j * T2
    left = sigma1 + 1j * np.linspace(T2, T1, n_v, endpoint=False)
    vertices = np.concatenate((bottom, right, top, left))
    return np.append(vertices, vertices[0])


def _raw_winding(a: complex, sigma1: float, sigma2: float, T1: float, T2: float,
                 initial_mesh: int) -> Tuple[float, int]:
    vertices = _contour(sigma1, sigma2, T1, T2, initial_mesh)
    values = _shifted(vertices, a, "winding_count")
    increments, refinements = _arg_increments(vertices[:-1], vertices[1:], values[:-1], values[1:], a,
                                              "winding_count")
    return float(np.sum(increments)) / (2.0 * math.pi), refinements


def _rounded(raw: float, operation: str) -> Tuple[int, float]:
    count = int(round(raw))
    residual = abs(raw - count)
    if residual >= 0.1:
        raise QuadratureError(f"winding number {raw:.4f} is not near an integer", best_estimate=raw,
                              err_est=residual, module="apoints", operation=operation)
    return count, residual


def winding_block(a: complex, sigma1: float, sigma2: float, T1: float, T2: float,
                  initial_mesh: int = WINDING_INITIAL_MESH) -> WindingBlock:
    """
    Winding number of zeta(s) - a around one rectangle, with the on-contour retry policy.

    An a-point closer than 1e-9 to the contour moves both horizontal edges up by
    1e-3 and the contour is traced again, at most five times. The block reports
    the edges actually traced.

    Args:
        a (complex): Target value, nonzero.
        sigma1 (float): Left edge, above 1/2.
        sigma2 (float): Right edge.
        T1 (float): Bottom edge, at least 1.
        T2 (float): Top edge.
        initial_mesh (int): Minimum number of segments per edge.

    Returns:
        WindingBlock: Count, rounding residual, refinements and retries used.

    Raises:
        OnContourRootError: The contour still meets an a-point after every retry.
    """
    _check_rectangle(a, sigma1, sigma2, T1, T2, "winding_count")
    retrying = Retrying(stop=stop_after_attempt(ON_CONTOUR_RETRIES + 1),
                        retry=retry_if_exception_type(OnContourRootError),
                        before_sleep=before_sleep_log(logger, logging.WARNING), reraise=True)
    for attempt in retrying:
        with attempt:
            retries = attempt.retry_state.attempt_number - 1
            shift = retries * ON_CONTOUR_SHIFT
            raw, refinements = _raw_winding(a, sigma1, sigma2, T1 + shift, T2 + shift, initial_mesh)
    count, residual = _rounded(raw, "winding_count")
    return WindingBlock(t_lo=T1 + shift, t_hi=T2 + shift, count=count, residual=residual, refinements=refinements,
                        retries=retries)


def winding_count(a: complex, sigma1: float, sigma2: float, T1: float, T2: float,
                  initial_mesh: int = WINDING_INITIAL_MESH) -> int:
    """Number of a-points of zeta inside the rectangle, by the argument principle."""
    return winding_block(a, sigma1, sigma2, T1, T2, initial_mesh).count


def _polish(a: complex, s: complex) -> Optional[complex]:
    """Newton iteration with a central-difference derivative; None when it leaves the window or stalls."""
    for _ in range(_NEWTON_ITERATIONS):
        values = zeta_many(np.array([s, s + _NEWTON_STEP, s - _NEWTON_STEP]), extended=True)
        residual = values[0] - a
        if abs(residual) < ROOT_TOLERANCE:
            return complex(s)
        derivative = (values[1] - values[2]) / (2.0 * _NEWTON_STEP)
        if derivative == 0:
            return None
        s = complex(s - residual / derivative)
        if not (0.45 <= s.real <= 3.0 and 1.0 <= s.imag <= ZETA_T_MAX):
            return None
    return None


def _inside(s: complex, sigma1: float, sigma2: float, T1: float, T2: float) -> bool:
    return sigma1 <= s.real < sigma2 and T1 <= s.imag < T2


def _split(a: complex, cell: Tuple[float, float, float, float], count: int):
    """Two halves of a cell with their winding numbers, moving the cut off any a-point it meets."""
    sigma1, sigma2, T1, T2 = cell
    along_sigma = (sigma2 - sigma1) * 10.0 >= (T2 - T1)
    for offset in _SPLIT_OFFSETS:
        fraction = 0.5 + offset
        try:
            if along_sigma:
                cut = sigma1 + fraction * (sigma2 - sigma1)
                first, second = (sigma1, cut, T1, T2), (cut, sigma2, T1, T2)
            else:
                cut = T1 + fraction * (T2 - T1)
                first, second = (sigma1, sigma2, T1, cut), (sigma1, sigma2, cut, T2)
            first_count, _ = _rounded(_raw_winding(a, *first, 8)[0], "locate_apoints")
            return (first, first_count), (second, count - first_count)
        except OnContourRootError:
            logger.debug(f"Cut at fraction {fraction:.3f} of {cell} meets an a-point; moving it")
    raise OnContourRootError(f"no clean cut found for cell {cell}", module="apoints", operation="locate_apoints")


def locate_apoints(a: complex, rect: Rectangle, max_depth: int = ROOT_MAX_DEPTH) -> List[complex]:
    """
    a-points of zeta inside a rectangle of the s-plane.

    Cells are halved until each holds winding number one and a Newton iteration
    started at its center converges inside it to |zeta(s) - a| < 1e-10.

    Args:
        a (complex): Target value, nonzero.
        rect (Rectangle): sigma range [a1, a2] and t range [b1, b2].
        max_depth (int): Maximum number of halvings.

    Returns:
        List[complex]: The a-points, ordered by height.

    Raises:
        RangeError: A cell could not be resolved within max_depth halvings.
    """
    a = complex(a)
    cell = (rect.a1, rect.a2, rect.b1, rect.b2)
    _check_rectangle(a, *cell, "locate_apoints")
    count, _ = _rounded(_raw_winding(a, *cell, WINDING_INITIAL_MESH)[0], "locate_apoints")
    pending = [(cell, count, 0)]
    roots = []
    while pending:
        cell, count, depth = pending.pop()
        if count <= 0:
            continue
        if count == 1:
            sigma1, sigma2, T1, T2 = cell
            root = _polish(a, complex(0.5 * (sigma1 + sigma2), 0.5 * (T1 + T2)))
            if root is not None and _inside(root, *cell):
                roots.append(root)
                continue
        if depth >= max_depth:
            raise RangeError(f"cell {cell} with winding number {count} unresolved after {max_depth} halvings",
                             "apoints", "locate_apoints")
        for child, child_count in _split(a, cell, count):
            pending.append((child, child_count, depth + 1))
    logger.debug(f"Located {len(roots)} a-points of a={a} in {rect}")
    return sorted(roots, key=lambda s: (s.imag, s.real))


def _chunk_moments(model, sigmas: List[float], a: complex, weights: np.ndarray):
    """Per-chunk (count, mean, sum of squared deviations) of the weighted combination of log|zeta(sigma, X) - a|."""

    def block(lo: int, hi: int) -> Tuple[int, float, float]:
        log_modulus, argument = model.sample_block(lo, hi, sigmas)
        distances = np.log(np.abs(np.exp(log_modulus + 1j * argument) - a))
        combined = weights @ distances
        mean = float(np.mean(combined))
        return hi - lo, mean, float(np.sum((combined - mean) ** 2))

    return block


def _merge(parts: List[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    # chunk by chunk, so the result does not depend on the worker count
    count, mean, m2 = parts[0]
    for n_b, mean_b, m2_b in parts[1:]:
        total = count + n_b
        delta = mean_b - mean
        mean += delta * n_b / total
        m2 += m2_b + delta * delta * count * n_b / total
        count = total
    return count, mean, m2


def _coupled_estimate(a: complex, sigmas: List[float], weights: np.ndarray, n: int, seed: int,
                      tail_mode: str, cap: int, desc: str) -> FunctionEstimate:
    model = get_model(model_config(min(sigmas), seed, tail_mode, cap=cap))
    count, mean, m2 = _merge(chunked_map(_chunk_moments(model, sigmas, a, weights), 0, n, MC_CHUNK, desc))
    variance = m2 / max(count - 1, 1)
    return FunctionEstimate(value=float(mean), stderr=float(math.sqrt(variance / count)))


def f_a(sigma: float, a: complex, n: int, seed: int = 0, tail_mode: str = "gaussian-compensate",
        cap: int = MODEL_PRIME_CAP) -> FunctionEstimate:
    """
    Monte Carlo E log|zeta(sigma, X) - a| over n model draws.

    Args:
        sigma (float): Abscissa in (1/2, 1].
        a (complex): Target value, nonzero.
        n (int): Draw count, n <= 1e8.
        seed (int): Master seed.
        tail_mode (str): Model tail handling.
        cap (int): Cap on the model prime cutoff.

    Returns:
        FunctionEstimate: Mean and standard error.
    """
    a = complex(a)
    if a == 0:
        raise RangeError("a must be nonzero", "apoints", "f_a")
    if not 1 <= n <= 10**8:
        raise RangeError(f"n = {n} outside [1, 1e8]", "apoints", "f_a")
    estimate = _coupled_estimate(a, [sigma], np.array([1.0]), n, seed, tail_mode, cap, desc=f"f_a sigma={sigma}")
    logger.info(f"f_a(sigma={sigma}, a={a}) = {estimate.value:.6f} +- {estimate.stderr:.2g} (n={n})")
    return estimate


def density_c(a: complex, sigma1: float, sigma2: float, h: float = 0.01, n: int = DENSITY_MODEL_SAMPLES,
              seed: int = 0, tail_mode: str = "gaussian-compensate", cap: int = MODEL_PRIME_CAP) -> FunctionEstimate:
    """
    Density c(a, sigma1, sigma2) = (f_a'(sigma2) - f_a'(sigma1))/(2 pi) of a-points per unit height.

    Both derivatives are central differences of f_a at sigma +- h evaluated on the
    same model draws; the estimator averages the per-draw combination
    [F(sigma2 + h) - F(sigma2 - h) - F(sigma1 + h) + F(sigma1 - h)]/(4 pi h), so its
    standard error reflects the coupling. The O(h^2) bias is not estimated.

    Raises:
        StepError: h > min(sigma1 - 1/2, 1 - sigma2, (sigma2 - sigma1)/4).
    """
    a = complex(a)
    if a == 0:
        raise RangeError("a must be nonzero", "apoints", "density_c")
    if not 0.5 < sigma1 < sigma2 < 1.0:
        raise RangeError(f"need 1/2 < sigma1 < sigma2 < 1, got ({sigma1}, {sigma2})", "apoints", "density_c")
    limit = min(sigma1 - 0.5, 1.0 - sigma2, 0.25 * (sigma2 - sigma1))
    if not 0.0 < h <= limit:
        raise StepError(f"h = {h} outside (0, {limit:.6g}]", "apoints", "density_c")
    sigmas = [sigma1 - h, sigma1 + h, sigma2 - h, sigma2 + h]
    weights = np.array([1.0, -1.0, -1.0, 1.0]) / (4.0 * math.pi * h)
    estimate = _coupled_estimate(a, sigmas, weights, n, seed, tail_mode, cap, desc="density_c")
    logger.info(f"c(a={a}, {sigma1}, {sigma2}) = {estimate.value:.6f} +- {estimate.stderr:.2g} (h={h}, n={n})")
    return estimate


def _seams(a: complex, sigma1: float, sigma2: float, blocks: List[WindingBlock],
           initial_mesh: int) -> List[WindingBlock]:
    """
    Strips between neighbouring blocks whose shared edge moved on a retry.

    A gap strip counts positively and an overlap strip negatively, so the block
    counts plus the seam counts tile the requested window exactly.
    """
    seams = []
    for below, above in zip(blocks, blocks[1:]):
        if below.t_hi == above.t_lo:
            continue
        lo, hi = sorted((below.t_hi, above.t_lo))
        raw, refinements = _raw_winding(a, sigma1, sigma2, lo, hi, initial_mesh)
        count, residual = _rounded(raw, "census")
        sign = 1 if below.t_hi < above.t_lo else -1
        seams.append(WindingBlock(t_lo=lo, t_hi=hi, count=sign * count, residual=residual, refinements=refinements))
    return seams


def census(a: complex, sigma1: float, sigma2: float, T: float, h: float = 0.01, n: int = DENSITY_MODEL_SAMPLES,
           seed: int = 0, initial_mesh: int = WINDING_INITIAL_MESH, tail_mode: str = "gaussian-compensate",
           cap: int = MODEL_PRIME_CAP) -> ApointCensus:
    """
    a-points in sigma1 < sigma < sigma2, T <= t <= 2T against the predicted count c T.

    The window is cut into blocks of height 100 whose winding numbers are traced in
    parallel and summed. Where a retry moved a shared edge, the strip between the
    neighbours is traced too so no a-point is lost or counted twice.

    Args:
        a (complex): Target value, nonzero.
        sigma1 (float): Left edge of the strip.
        sigma2 (float): Right edge of the strip.
        T (float): Window start; 2T must stay within the zeta window.
        h (float): Difference step of density_c.
        n (int): Model draws of density_c.
        seed (int): Master seed.
        initial_mesh (int): Minimum segments per contour edge.
        tail_mode (str): Model tail handling.
        cap (int): Cap on the model prime cutoff.

    Returns:
        ApointCensus: The count, the prediction and per-block diagnostics.
    """
    a = complex(a)
    _check_rectangle(a, sigma1, sigma2, T, 2.0 * T, "census")
    edges = np.arange(T, 2.0 * T, WINDING_BLOCK_HEIGHT)
    bounds = [(float(lo), float(min(lo + WINDING_BLOCK_HEIGHT, 2.0 * T))) for lo in edges]
    logger.info(f"a-point census a={a} strip=({sigma1}, {sigma2}) T={T:g}: {len(bounds)} blocks")
    blocks = ordered_map(lambda b: winding_block(a, sigma1, sigma2, b[0], b[1], initial_mesh), bounds,
                         desc="winding blocks")
    seams = _seams(a, sigma1, sigma2, blocks, initial_mesh)
    if seams:
        logger.info(f"{len(seams)} seam strips close the gaps left by shifted contours")
        blocks = sorted(blocks + seams, key=lambda block: block.t_lo)
    count = sum(block.count for block in blocks)
    density = density_c(a, sigma1, sigma2, h, n, seed, tail_mode, cap)
    predicted = density.value * T
    logger.info(f"N_a = {count}, predicted c T = {predicted:.2f}")
    return ApointCensus(a=a, sigma1=sigma1, sigma2=sigma2, T=T, count=count, predicted_density=density.value,
                        predicted_count=predicted, density_stderr=density.stderr,
                        contour_refinements=sum(block.refinements for block in blocks),
                        max_residual=max(block.residual for block in blocks), blocks=blocks)


def littlewood_check(a: complex, sigma: float, T: float, n_t: int = 10**4, n_model: int = DENSITY_MODEL_SAMPLES,
                     seed: int = 0, backend: str = "auto", tail_mode: str = "gaussian-compensate",
                     cap: int = MODEL_PRIME_CAP) -> LittlewoodReport:
    """
    (1/T) int_T^2T log|zeta(sigma + it) - a| dt by stratified sampling against f_a(sigma).

    gap_over_error = |lhs - rhs| / (3 sqrt(se_lhs^2 + se_rhs^2) + (log log T)^2/(log T)^sigma).
    With backend "auto" heights from 1e4 up use exp(R_Y) in place of zeta.
    """
    a = complex(a)
    window = LineWindow(sigma=sigma, T=T, sample_count=n_t, seed=seed, backend=resolve_backend(T, backend))
    samples = sample_line(window)
    distances = np.log(np.abs(np.exp(samples.log_modulus + 1j * samples.argument) - a))
    lhs = float(np.mean(distances))
    lhs_stderr = float(np.std(distances, ddof=1) / math.sqrt(distances.size))
    rhs = f_a(sigma, a, n_model, seed, tail_mode, cap)
    log_T = math.log(T)
    budget = 3.0 * math.hypot(lhs_stderr, rhs.stderr) + math.log(log_T) ** 2 / log_T ** sigma
    report = LittlewoodReport(a=a, sigma=sigma, T=T, lhs=lhs, lhs_stderr=lhs_stderr, rhs=rhs.value,
                              rhs_stderr=rhs.stderr, gap_over_error=abs(lhs - rhs.value) / budget)
    logger.info(f"Mean log|zeta - a| at sigma={sigma} T={T:g}: {lhs:.5f} vs model {rhs.value:.5f} "
                f"(gap/error {report.gap_over_error:.3f})")
    return report


def log_distance_moments(log_modulus: np.ndarray, argument: np.ndarray, a: complex) -> Tuple[float, float]:
    """Empirical second and fourth moments of log|zeta - a| over a sample of log zeta values."""
    distances = np.log(np.abs(np.exp(np.asarray(log_modulus) + 1j * np.asarray(argument)) - complex(a)))
    return float(np.mean(distances ** 2)), float(np.mean(distances ** 4))


def _simpson(values: np.ndarray, nodes: np.ndarray) -> float:
    return float(integrate.simpson(values, x=nodes))


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    intervals = max(2, int(math.ceil((hi - lo) / step)))
    intervals += intervals % 2
    return np.linspace(lo, hi, intervals + 1)


def littlewood_rectangle(a: complex, sigma1: float, sigma0: float, T1: float, T2: float,
                         step: float = LITTLEWOOD_STEP) -> LittlewoodRectangleReport:
    """
    Both sides of Littlewood's lemma for zeta(s) - a on [sigma1, sigma0] x [T1, T2].

    The contour side is int log|f(sigma1 + it)| dt - int log|f(sigma0 + it)| dt
    + int arg f(sigma + iT2) d sigma - int arg f(sigma + iT1) d sigma, the argument
    continued up the right edge from its principal value at sigma0 + iT1 and then
    leftwards along each horizontal edge. The root side is 2 pi times the sum of
    (beta - sigma1) over the located a-points. Integrals use Simpson's rule.

    Args:
        a (complex): Target value, nonzero.
        sigma1 (float): Left edge.
        sigma0 (float): Right edge.
        T1 (float): Bottom edge.
        T2 (float): Top edge.
        step (float): Simpson node spacing.

    Returns:
        LittlewoodRectangleReport: Both sides and the a-points found.
    """
    a = complex(a)
    _check_rectangle(a, sigma1, sigma0, T1, T2, "littlewood_rectangle")
    t = _grid(T1, T2, step)
    f_left = _shifted(sigma1 + 1j * t, a, "littlewood_rectangle")
    right_edge = sigma0 + 1j * t
    f_right = _shifted(right_edge, a, "littlewood_rectangle")
    vertical = _simpson(np.log(np.abs(f_left)), t) - _simpson(np.log(np.abs(f_right)), t)

    climb, _ = _arg_increments(right_edge[:-1], right_edge[1:], f_right[:-1], f_right[1:], a,
                               "littlewood_rectangle")
    anchor_bottom = float(np.angle(f_right[0]))
    anchor_top = anchor_bottom + float(np.sum(climb))

    sigmas = _grid(sigma1, sigma0, step / 10.0)[::-1]

    def horizontal(height: float, anchor: float) -> float:
        points = sigmas + 1j * height
        values = _shifted(points, a, "littlewood_rectangle")
        increments, _ = _arg_increments(points[:-1], points[1:], values[:-1], values[1:], a, "littlewood_rectangle")
        args = anchor + np.concatenate(([0.0], np.cumsum(increments)))
        return _simpson(args[::-1], sigmas[::-1])

    contour_side = vertical + horizontal(T2, anchor_top) - horizontal(T1, anchor_bottom)
    roots = locate_apoints(a, Rectangle(a1=sigma1, a2=sigma0, b1=T1, b2=T2))
    root_side = 2.0 * math.pi * sum(root.real - sigma1 for root in roots)
    logger.info(f"Littlewood rectangle a={a}: contour {contour_side:.8f}, roots {root_side:.8f} ({len(roots)} a-points)")
    return LittlewoodRectangleReport(a=a, sigma1=sigma1, sigma2=sigma0, T1=T1, T2=T2, contour_side=contour_side,
                                     root_side=root_side, roots=roots)
