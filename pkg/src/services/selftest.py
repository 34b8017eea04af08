import math
import time
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import special

from models.pydantic_classes import AcceptanceResult, LineWindow, PerronKernelSpec, Rectangle, SelftestReport
from src.services import apoints, discrepancy, empirical, moments, smoothing, tails
from src.services.random_model import get_model, model_config, moment_oracle_small
from src.utils.artifacts import dumps
from src.utils.errors import ZetaLabError
from src.utils.logger import setup_logger
from src.utils.parallel import get_threads, set_threads
from src.utils.zeta_eval import zeta

logger = setup_logger(__name__)

# Sizes per scale. "full" runs the acceptance sizes; "quick" shrinks samples and heights
# and relaxes the purely statistical comparisons to the smaller samples' error bars.
SCALES: Dict[str, dict] = {
    "quick": {
        "tail_n": 10**6,
        "approx_T": 1e3, "approx_n": 500,
        "charfun_n": 2000,
        "second_T": 1e3, "second_n": 5000,
        "trend_T": [1e3, 1e4, 1e5], "trend_n": 2000,
        "littlewood_T": 1e4, "littlewood_n": 1000, "littlewood_model": 10**5,
        "census_T": 1e3, "census_n": 2 * 10**5, "census_tolerance": 0.5,
    },
    "full": {
        "tail_n": 10**7,
        "approx_T": 1e5, "approx_n": 10**4,
        "charfun_n": 10**4,
        "second_T": 1e4, "second_n": 10**5,
        "trend_T": [1e3, 1e4, 1e5, 1e6], "trend_n": 10**5,
        "littlewood_T": 1e6, "littlewood_n": 10**4, "littlewood_model": 10**7,
        "census_T": 1e4, "census_n": 10**7, "census_tolerance": 0.35,
    },
}

_SIGMAS = (0.6, 0.75, 0.9)

Check = Callable[[], Tuple[bool, str]]


class Selftest:
    """Acceptance suite; every check returns (passed, detail) and never raises."""

    def __init__(self, scale: str = "quick", seed: int = 12345):
        self.scale = scale
        self.sizes = SCALES[scale]
        self.seed = seed

    def checks(self) -> List[Tuple[str, Check]]:
        return [
            ("second moment identity", self.moment_identity),
            ("zero mean", self.zero_mean),
            ("cumulant gradients", self.cumulant_gradients),
            ("saddle round trip", self.saddle_round_trip),
            ("saddle vs monte carlo tail", self.saddle_vs_mc),
            ("asymptotic constants", self.asymptotic_constants),
            ("fourier decay", self.fourier_decay),
            ("smoothing toolkit", self.smoothing_toolkit),
            ("moment oracle", self.moment_oracle),
            ("dirichlet surrogate", self.dirichlet_surrogate),
            ("characteristic functions", self.characteristic_functions),
            ("second moment correction", self.second_moment_correction),
            ("discrepancy trend", self.discrepancy_trend),
            ("littlewood identity", self.littlewood_identity),
            ("a-point census", self.apoint_census),
            ("determinism", self.determinism),
        ]

    def run(self) -> SelftestReport:
        results = []
        for name, check in self.checks():
            logger.info(f"Selftest [{self.scale}] {name}")
            started = time.perf_counter()
            try:
                passed, detail = check()
            except ZetaLabError as e:
                passed, detail = False, f"{type(e).__name__}: {e}"
            seconds = time.perf_counter() - started
            logger.info(f"Selftest {name}: {'PASS' if passed else 'FAIL'} ({seconds:.1f}s) {detail}")
            results.append(AcceptanceResult(name=name, passed=bool(passed), detail=detail, seconds=seconds))
        return SelftestReport(scale=self.scale, results=results)

    def moment_identity(self):
        gaps = [abs(moments.M(sigma, 2.0).M.real - math.log(special.zeta(2.0 * sigma))) for sigma in _SIGMAS]
        return max(gaps) <= 1e-10, f"max |M(sigma, 2) - log zeta(2 sigma)| = {max(gaps):.2e}"

    def zero_mean(self):
        values = [abs(moments.cumulants(sigma, 0.0).M1) for sigma in _SIGMAS]
        return max(values) <= 1e-10, f"max |M'(0)| = {max(values):.2e}"

    def cumulant_gradients(self):
        sigma, h, worst = 0.75, 1e-3, 0.0
        for k in (1.0, 10.0, 100.0):
            report = moments.cumulants(sigma, k)
            lower, upper = moments.cumulants(sigma, k - h), moments.cumulants(sigma, k + h)
            M1 = (moments.M(sigma, k + h).M.real - moments.M(sigma, k - h).M.real) / (2.0 * h)
            M2 = (upper.M1 - lower.M1) / (2.0 * h)
            M3 = (upper.M2 - lower.M2) / (2.0 * h)
            for analytic, numeric in ((report.M1, M1), (report.M2, M2), (report.M3, M3)):
                worst = max(worst, abs(analytic - numeric) / max(abs(analytic), 1e-300))
        return worst <= 1e-6, f"worst relative gap {worst:.2e}"

    def saddle_round_trip(self):
        worst = 0.0
        for k in (0.5, 2.0, 20.0, 200.0):
            tau = moments.cumulants(0.75, k).M1
            worst = max(worst, abs(tails.solve_saddle(0.75, tau).kappa - k) / max(1.0, k))
        return worst <= 1e-8, f"worst |kappa(M'(k)) - k| = {worst:.2e}"

    def saddle_vs_mc(self):
        n = self.sizes["tail_n"]
        estimates = {tau: tails.compare_tail(0.75, tau, n, self.seed) for tau in (1.0, 1.5, 2.0)}
        verdicts = {tau: e.verdict for tau, e in estimates.items()}
        if any(v == "mc-unavailable" for v in verdicts.values()):
            return False, f"too few draws for a Monte Carlo comparison: {verdicts}"

        def relative(e):
            return abs(e.p_mc - e.p_saddle) / e.p_saddle, e.mc_stderr / e.p_saddle

        gap_low, _ = relative(estimates[1.0])
        gap_high, se_high = relative(estimates[2.0])
        shrinking = gap_high <= gap_low + 3.0 * se_high
        agree = all(v == "agree" for v in verdicts.values())
        return agree and shrinking, f"verdicts {verdicts}, relative gaps {gap_low:.3f} -> {gap_high:.3f}"

    def asymptotic_constants(self):
        sigma = 0.75
        constants = moments.asymptotic_constants(sigma)
        identity = constants.g2_residual <= 1e-10
        # M'(kappa) log kappa / kappa^(1/sigma - 1) approaches g1 slowly from above
        ratios = []
        for kappa in (100.0, 1000.0):
            M1 = moments.cumulants(sigma, kappa).M1
            ratios.append(M1 * math.log(kappa) / kappa ** (1.0 / sigma - 1.0) / constants.g1)
        shape = all(0.5 <= r <= 2.5 for r in ratios) and abs(ratios[1] - 1.0) < abs(ratios[0] - 1.0)
        # the rate function's slope is kappa(tau)
        duality, h = 0.0, 1e-4
        for tau in (1.5, 2.0, 3.0):
            slope = (tails.rate_function(sigma, tau + h) - tails.rate_function(sigma, tau - h)) / (2.0 * h)
            kappa = tails.solve_saddle(sigma, tau).kappa
            duality = max(duality, abs(slope - kappa) / kappa)
        passed = identity and shape and duality <= 1e-5
        return passed, (f"g2 residual {constants.g2_residual:.1e}, shape ratios "
                        f"{ratios[0]:.3f}, {ratios[1]:.3f}, duality gap {duality:.1e}")

    def fourier_decay(self):
        worst = -math.inf
        for sigma in (0.75, 1.0):
            for u in (20.0, 50.0, 100.0):
                value = abs(moments.phi_rand(sigma, u, 0.0).value)
                worst = max(worst, value / math.exp(-u / (5.0 * math.log(u))))
        return worst <= 1.0, f"max |Phi|/envelope = {worst:.3e}"

    def smoothing_toolkit(self):
        exact = (smoothing.selberg_G(0.0) == 2.0 / math.pi and smoothing.selberg_G(1.0) == 0.0
                 and abs(smoothing.selberg_G(0.5) - 1.0 / math.pi) <= 1e-15)
        sgn_ok = True
        for L in (4.0, 16.0):
            for x in (0.1, 1.0, 3.7, -0.1, -1.0, -3.7):
                error = abs(smoothing.sgn_approx(x, L) - math.copysign(1.0, x))
                sgn_ok &= error <= 5.0 * smoothing.fejer_kernel(x, L) + 1e-9
        generator = np.random.default_rng(self.seed)
        fejer_gap = 0.0
        for x, L in zip(generator.uniform(-3.0, 3.0, 20), generator.uniform(0.5, 20.0, 20)):
            lhs, rhs = smoothing.fejer_identity_check(float(x), float(L))
            fejer_gap = max(fejer_gap, abs(lhs - rhs))
        spec = PerronKernelSpec(lam=0.01, N=10, kappa=1.0)
        heights = np.linspace(-1e3, 1e3, 1000)
        kernel_ok = all(abs(smoothing.perron_kernel(complex(spec.kappa, t), spec)) <= 3.0 ** spec.N for t in heights)
        lower_hi, upper_hi = smoothing.perron_bracket_check(2.0, spec)
        lower_lo, upper_lo = smoothing.perron_bracket_check(0.5, spec)
        bracket_ok = (max(abs(lower_hi - 1.0), abs(upper_hi - 1.0)) <= 0.02
                      and max(abs(lower_lo), abs(upper_lo)) <= 0.02)
        passed = exact and sgn_ok and fejer_gap < 1e-10 and kernel_ok and bracket_ok
        return passed, (f"G exact {exact}, sgn envelope {sgn_ok}, fejer gap {fejer_gap:.1e}, kernel {kernel_ok}, "
                        f"bracket y=2 [{lower_hi:.4f}, {upper_hi:.4f}] y=0.5 [{lower_lo:.4f}, {upper_lo:.4f}]")

    def moment_oracle(self):
        worst, bounded = 0.0, True
        for sigma in _SIGMAS:
            radii = np.array([2.0, 3.0, 5.0]) ** (-sigma)
            S2, S4 = float(np.sum(radii ** 2)), float(np.sum(radii ** 4))
            for k, closed in ((1, S2), (2, 2.0 * S2 * S2 - S4)):
                exact = moment_oracle_small([2, 3, 5], sigma, k)
                worst = max(worst, abs(exact - closed))
                bounded &= exact <= math.factorial(k) * S2 ** k + 1e-12
        return worst <= 1e-12 and bounded, f"max gap to closed forms {worst:.1e}, within k! S2^k: {bounded}"

    def dirichlet_surrogate(self):
        report = empirical.approximation_check(0.75, self.sizes["approx_T"], self.sizes["approx_n"], self.seed)
        return report.fraction_within >= 0.99, f"{report.fraction_within:.2%} within {report.bound:.3g}"

    def characteristic_functions(self):
        window = LineWindow(sigma=0.75, T=1e6, sample_count=self.sizes["charfun_n"], seed=self.seed,
                            backend="dirichlet-RY")
        samples = empirical.sample_line(window)
        reports = [empirical.charfun_comparison(samples, u, v) for u, v in ((1, 0), (0, 1), (1, 1), (3, 2))]
        return all(r.passed for r in reports), ", ".join(f"({r.u:g},{r.v:g}) gap {r.gap:.3f}" for r in reports)

    def second_moment_correction(self):
        report = empirical.second_moment(0.6, self.sizes["second_T"], self.sizes["second_n"], self.seed)
        observed = report.mean_sq - report.prediction
        same_sign = math.copysign(1.0, observed) == math.copysign(1.0, report.secondary_term)
        close = abs(observed - report.secondary_term) <= max(3.0 * report.mean_sq_stderr,
                                                             0.3 * abs(report.secondary_term))
        return same_sign and close, (f"mean_sq - zeta(2 sigma) = {observed:.4f} +- {report.mean_sq_stderr:.4f}, "
                                     f"secondary term {report.secondary_term:.4f}")

    def discrepancy_trend(self):
        n = self.sizes["trend_n"]
        trend = discrepancy.decay_trend(0.75, self.sizes["trend_T"], n, n, self.seed)
        first, last = trend.reports[0], trend.reports[-1]
        if self.scale == "full":
            decreasing = trend.strictly_decreasing
        else:
            decreasing = last.D_hat <= first.D_hat + 3.0 * first.stat_err
        cfg = model_config(0.75, self.seed, "gaussian-compensate")
        other = model_config(0.75, self.seed + 1, "gaussian-compensate")
        null = discrepancy.discrepancy_estimate(discrepancy.model_ecdf(cfg, n), discrepancy.model_ecdf(other, n))
        null_ok = null.D_hat <= 3.0 * null.stat_err
        trail = ", ".join(f"{r.D_hat:.4f}" for r in trend.reports)
        return decreasing and null_ok, f"D_hat {trail}; null {null.D_hat:.4f} vs 3 stat_err {3 * null.stat_err:.4f}"

    def littlewood_identity(self):
        gaps = []
        for a in (1.0 + 0j, 1.0 + 1j):
            report = apoints.littlewood_check(a, 0.75, self.sizes["littlewood_T"], self.sizes["littlewood_n"],
                                              self.sizes["littlewood_model"], self.seed)
            gaps.append(report.gap_over_error)
        return max(gaps) <= 1.0, f"gap_over_error {', '.join(f'{g:.3f}' for g in gaps)}"

    def apoint_census(self):
        T = self.sizes["census_T"]
        census = apoints.census(2.0, 0.55, 0.95, T, h=0.01, n=self.sizes["census_n"], seed=self.seed)
        certified = census.max_residual < 0.1
        predicted = census.predicted_count
        relative = abs(census.count - predicted) / predicted if predicted > 0 else math.inf
        first = census.blocks[0]
        roots = apoints.locate_apoints(2.0, Rectangle(a1=0.55, a2=0.95, b1=first.t_lo, b2=first.t_hi))
        polished = all(abs(zeta(root) - 2.0) < 1e-10 for root in roots) and len(roots) == first.count
        passed = certified and polished and relative <= self.sizes["census_tolerance"]
        return passed, (f"N_a = {census.count}, c T = {predicted:.1f} (rel. gap {relative:.3f}), "
                        f"max residual {census.max_residual:.1e}, first block roots {len(roots)}/{first.count}")

    def determinism(self):
        threads = get_threads()
        payloads = []
        for workers in (1, max(2, threads)):
            set_threads(workers)
            try:
                tail = tails.tail_probability_mc(0.75, 1.0, 3 * 10**4, self.seed)
                draws = get_model(model_config(0.75, self.seed)).sample(5000)
                window = LineWindow(sigma=0.75, T=1e3, sample_count=200, seed=self.seed)
                samples = empirical.sample_line(window)
            finally:
                set_threads(threads)
            payloads.append(dumps(tail) + draws[0].tobytes() + draws[1].tobytes()
                            + samples.log_modulus.tobytes() + samples.argument.tobytes())
        same = payloads[0] == payloads[1]
        return same, f"payloads {'identical' if same else 'differ'} across 1 and {max(2, threads)} workers"
