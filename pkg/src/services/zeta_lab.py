import pandas as pd

from models.pydantic_classes import (ApointCensus, AsymptoticConstants, CharfunComparison, DecayTrendReport,
                                     LineWindow, MomentReport, RunConfig, TailEstimate)
from src.config import CACHE_DIRECTORY, CONSTANTS_FIT_TAUS
from src.services import apoints, discrepancy, empirical, moments, tails
from src.utils.artifacts import ArtifactWriter
from src.utils.errors import RangeError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


class ZetaLab:
    """
    Facade giving the command line one entry point per pipeline.

    Every method reads its parameters from the RunConfig, runs the pipeline and
    writes its artifacts plus a manifest under output_dir/<subcommand>.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    def _writer(self, subcommand: str) -> ArtifactWriter:
        return ArtifactWriter(self.cfg.output_dir, subcommand, self.cfg.format, self.cfg.emit_plots)

    def _finish(self, writer: ArtifactWriter, inputs: dict) -> None:
        writer.write_manifest(inputs, self.cfg.seed)

    @property
    def _Y(self):
        return self.cfg.Y if self.cfg.Y_policy == "explicit" else None

    # Model side
    def moments(self) -> MomentReport:
        cfg = self.cfg
        z = complex(cfg.z_re, cfg.z_im)
        report = moments.M(cfg.sigma, z, P_quad=cfg.prime_limit)
        writer = self._writer("moments")
        writer.write_json("moments", report)
        writer.write_csv("moments", [{"sigma": cfg.sigma, "z_re": cfg.z_re, "z_im": cfg.z_im,
                                      "M_re": report.M.real, "M_im": report.M.imag,
                                      "tail_bound": report.tail_bound, "quad_err": report.quad_err}])
        self._finish(writer, {"sigma": cfg.sigma, "z_re": cfg.z_re, "z_im": cfg.z_im, "prime_limit": cfg.prime_limit})
        return report

    def tail(self) -> TailEstimate:
        cfg = self.cfg
        report = tails.compare_tail(cfg.sigma, cfg.tau, cfg.mc_samples, cfg.seed, P_quad=cfg.prime_limit,
                                    tail_mode=cfg.tail_mode, cap=cfg.model_prime_cap)
        writer = self._writer("tail")
        writer.write_json("tail", report)
        writer.write_csv("tail", [report.model_dump(exclude={"family"})])
        self._finish(writer, {"sigma": cfg.sigma, "tau": cfg.tau, "mc_samples": cfg.mc_samples,
                              "tail_mode": cfg.tail_mode})
        return report

    def constants(self) -> AsymptoticConstants:
        """g0, g1, g2 at sigma, with A(sigma) fitted from saddle tails when sigma < 1."""
        cfg = self.cfg
        report = moments.asymptotic_constants(cfg.sigma)
        if cfg.sigma < 1.0:
            try:
                fit = tails.fit_A(cfg.sigma, CONSTANTS_FIT_TAUS, P_quad=cfg.prime_limit)
                report = report.model_copy(update={"A_fit": fit.A, "A_fit_stderr": fit.stderr})
            except RangeError as e:
                logger.warning(f"A(sigma) fit skipped: {e}")
        writer = self._writer("constants")
        writer.write_json("constants", report)
        writer.write_csv("constants", [report.model_dump()])
        self._finish(writer, {"sigma": cfg.sigma})
        return report

    # Empirical side
    def charfun(self) -> CharfunComparison:
        cfg = self.cfg
        backend = empirical.resolve_backend(cfg.T, cfg.backend)
        window = LineWindow(sigma=cfg.sigma, T=cfg.T, sample_count=cfg.samples, seed=cfg.seed, backend=backend,
                            Y=self._Y)
        samples = empirical.sample_line(window)
        report = empirical.charfun_comparison(samples, cfg.u, cfg.v, window.resolved_Y)
        writer = self._writer("charfun")
        writer.write_json("charfun", report)
        writer.write_csv("charfun", [{"sigma": cfg.sigma, "T": cfg.T, "u": cfg.u, "v": cfg.v,
                                      "phi_emp_re": report.phi_empirical.value.real,
                                      "phi_emp_im": report.phi_empirical.value.imag,
                                      "phi_emp_stderr": report.phi_empirical.error,
                                      "phi_rand_re": report.phi_rand.value.real,
                                      "phi_rand_im": report.phi_rand.value.imag,
                                      "phi_rand_error": report.phi_rand.error,
                                      "gap": report.gap, "tolerance": report.tolerance}])
        self._finish(writer, {"sigma": cfg.sigma, "T": cfg.T, "u": cfg.u, "v": cfg.v, "samples": cfg.samples,
                              "backend": backend, "Y": window.resolved_Y})
        return report

    def discrepancy(self) -> DecayTrendReport:
        cfg = self.cfg
        report = discrepancy.decay_trend(cfg.sigma, cfg.T_list, cfg.samples, cfg.model_samples, cfg.seed, cfg.grid,
                                         cfg.backend, cfg.tail_mode, cfg.model_prime_cap, CACHE_DIRECTORY)
        frame = pd.DataFrame([{"T": row.T, "D_hat": row.D_hat, "stat_err": row.stat_err,
                               "grid_slack": row.grid_slack, "predicted_rate": row.predicted_rate,
                               "emp_count": row.emp_count, "model_count": row.model_count}
                              for row in report.reports])
        writer = self._writer("discrepancy")
        writer.write_csv("decay_trend", frame)
        writer.write_json("decay_trend", report)
        writer.write_gnuplot("decay_trend", frame, "T", ["D_hat", "predicted_rate"],
                             title=f"D_hat at sigma = {cfg.sigma}", logscale="xy")
        self._finish(writer, {"sigma": cfg.sigma, "T_list": cfg.T_list, "samples": cfg.samples,
                              "model_samples": cfg.model_samples, "grid": cfg.grid, "backend": cfg.backend})
        return report

    def apoints(self) -> ApointCensus:
        cfg = self.cfg
        report = apoints.census(cfg.a, cfg.sigma1, cfg.sigma2, cfg.T, h=cfg.h, n=cfg.model_samples, seed=cfg.seed,
                                tail_mode=cfg.tail_mode, cap=cfg.model_prime_cap)
        writer = self._writer("apoints")
        writer.write_csv("blocks", [{"t_lo": b.t_lo, "t_hi": b.t_hi, "count": b.count, "refinements": b.refinements}
                                    for b in report.blocks])
        writer.write_json("census", {"a": {"re": cfg.a_re, "im": cfg.a_im}, "sigma1": cfg.sigma1,
                                     "sigma2": cfg.sigma2, "T": cfg.T, "count": report.count,
                                     "c": report.predicted_density, "c_stderr": report.density_stderr,
                                     "predicted_count": report.predicted_count,
                                     "contour_refinements": report.contour_refinements,
                                     "max_residual": report.max_residual})
        self._finish(writer, {"a_re": cfg.a_re, "a_im": cfg.a_im, "sigma1": cfg.sigma1, "sigma2": cfg.sigma2,
                              "T": cfg.T, "h": cfg.h, "model_samples": cfg.model_samples})
        return report
