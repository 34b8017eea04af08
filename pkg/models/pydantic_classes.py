from typing import Annotated, List, Literal, Optional

import numpy as np
from pydantic import (BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer,
                      field_validator, model_validator)


def _to_complex(value):
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return complex(value)


# Complex numbers travel as {"re": .., "im": ..} in JSON payloads
ComplexNumber = Annotated[
    complex,
    BeforeValidator(_to_complex),
    PlainSerializer(lambda c: {"re": float(c.real), "im": float(c.imag)}, return_type=dict, when_used="json"),
]


# Numerics
class QuadratureSpec(BaseModel):
    rule: Literal["periodic-trapezoid", "adaptive-interval", "transformed-semi-infinite"] = Field(
        default="periodic-trapezoid", description="Quadrature rule")
    abs_tol: float = Field(default=1e-13, gt=0, description="Absolute tolerance")
    max_nodes: int = Field(default=2**16, ge=16, description="Node budget")


class LogZetaValue(BaseModel):
    log_modulus: float = Field(description="log|zeta(sigma+it)|")
    argument: float = Field(description="arg zeta(sigma+it) by continuous variation from 3+it")
    quality: Literal["ok", "near_zero", "path_refined"] = Field(default="ok")


# Random model
class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: float = Field(gt=0.5, le=1.0, description="Line abscissa, constrained to (1/2, 1]")
    prime_cutoff: int = Field(ge=2, le=10**9, description="Largest prime P carried by the Euler product")
    master_seed: int = Field(default=0, ge=0, lt=2**64, description="64-bit master seed")
    tail_mode: Literal["drop", "gaussian-compensate"] = Field(default="drop")


class ModelSample(BaseModel):
    log_modulus: float
    argument: float

    @field_validator("log_modulus", "argument")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("model samples must be finite")
        return value


# Moments
class MomentReport(BaseModel):
    sigma: float
    z: ComplexNumber
    family: Literal["modulus", "argument"] = "modulus"
    M: ComplexNumber = Field(description="log E|zeta(sigma,X)|^z, or log E exp(z arg) for the argument family")
    per_prime_terms_used: int
    tail_bound: float
    quad_err: float


class CumulantReport(BaseModel):
    sigma: float
    k: float = Field(ge=0)
    family: Literal["modulus", "argument"] = "modulus"
    M1: float
    M2: float
    M3: float
    err: float


class AsymptoticConstants(BaseModel):
    sigma: float
    g0: float
    g0_err: float
    g1: float
    g1_err: float
    g2: float
    g2_residual: float = Field(description="|g2 - (sigma/((1-sigma) g1))^(sigma/(1-sigma))|")
    A_fit: Optional[float] = None
    A_fit_stderr: Optional[float] = None


class DecayRatio(BaseModel):
    sigma: float
    k: float
    t: float
    ratio: float
    envelope: float = Field(description="exp(-|t|^(1/sigma-1))")


# Tails
class SaddleSolution(BaseModel):
    sigma: float
    tau: float
    family: Literal["modulus", "argument"] = "modulus"
    kappa: float = Field(gt=0)
    M_at_kappa: float
    M2_at_kappa: float = Field(gt=0)
    residual: float
    newton_iters: int


class TailEstimate(BaseModel):
    sigma: float
    tau: float
    family: Literal["modulus", "argument"] = "modulus"
    kappa: Optional[float] = None
    p_saddle: Optional[float] = None
    p_mc: Optional[float] = None
    mc_stderr: Optional[float] = None
    mc_samples: Optional[int] = None
    correction_scale: Optional[float] = Field(default=None, description="kappa^(1-1/sigma) log kappa")
    verdict: Optional[Literal["agree", "disagree", "mc-unavailable"]] = None


class AFit(BaseModel):
    sigma: float
    A: float
    stderr: float
    taus: List[float]


# Smoothing
class Rectangle(BaseModel):
    a1: float
    a2: float
    b1: float
    b2: float

    @model_validator(mode="after")
    def _ordered(self):
        if not (self.a1 < self.a2 and self.b1 < self.b2):
            raise ValueError("rectangle needs a1 < a2 and b1 < b2")
        return self

    def contains(self, x: float, y: float) -> bool:
        return self.a1 <= x <= self.a2 and self.b1 <= y <= self.b2


class PerronKernelSpec(BaseModel):
    lam: float = Field(gt=0, alias="lambda")
    N: int = Field(ge=1)
    kappa: float = Field(default=1.0, gt=0, description="Contour abscissa")

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def _working_regime(self):
        if self.lam * self.kappa >= 0.5:
            raise ValueError("lambda * kappa must be below 1/2")
        return self


# Empirical
class LineWindow(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: float = Field(gt=0.5, le=1.0)
    T: float = Field(ge=100)
    sample_count: int = Field(ge=100)
    sampler: Literal["uniform-random", "stratified"] = "stratified"
    seed: int = Field(default=0, ge=0, lt=2**64)
    backend: Literal["full-zeta", "dirichlet-RY"] = "full-zeta"
    Y: Optional[float] = Field(default=None, gt=1)

    @model_validator(mode="after")
    def _window(self):
        if self.backend == "full-zeta" and 2 * self.T > 1e7:
            raise ValueError("full-zeta backend needs 2T <= 1e7")
        return self

    @property
    def resolved_Y(self) -> float:
        return self.Y if self.Y is not None else float(np.log(self.T)) ** 4


class LineSampleSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    window: LineWindow
    t: np.ndarray
    log_modulus: np.ndarray
    argument: np.ndarray
    quality: np.ndarray = Field(description="0 ok, 1 near_zero, 2 path_refined")
    excluded_count: int = 0

    @property
    def count(self) -> int:
        return int(self.t.size)

    @property
    def excluded_fraction(self) -> float:
        return self.excluded_count / self.window.sample_count


class CharacteristicEstimate(BaseModel):
    sigma: float
    u: float
    v: float
    value: ComplexNumber
    error: float
    error_kind: Literal["stderr", "truncation"]


class CharfunComparison(BaseModel):
    sigma: float
    T: float
    u: float
    v: float
    phi_empirical: CharacteristicEstimate
    phi_rand: CharacteristicEstimate
    gap: float
    tolerance: float = Field(description="3 * (stderr + truncation bound)")
    passed: bool


class SecondMomentReport(BaseModel):
    sigma: float
    T: float
    n: int
    mean_sq: float
    mean_sq_stderr: float
    prediction: float
    secondary_term: float
    residual: float


class ApproximationReport(BaseModel):
    sigma: float
    T: float
    Y: float
    n: int
    bound: float
    fraction_within: float
    max_gap: float


class PropComplexReport(BaseModel):
    sigma: float
    T: float
    Y: float
    z1: ComplexNumber
    z2: ComplexNumber
    lhs: ComplexNumber = Field(description="Mean over retained t")
    lhs_over_T: ComplexNumber = Field(description="Sum over retained t divided by the sample count")
    lhs_stderr: float
    rhs: ComplexNumber = Field(description="Model mean over draws meeting the same restriction")
    rhs_stderr: float
    rhs_unrestricted: ComplexNumber = Field(description="Model mean over every draw")
    gap: float
    retained_fraction: float
    model_retained_fraction: float


class DiagonalMomentReport(BaseModel):
    sigma: float
    T: float
    y: float
    z: float
    k: int
    empirical: float
    empirical_stderr: float
    random_exact: Optional[float] = None
    random_bound: float


class DirichletMomentReport(BaseModel):
    sigma: float
    T: float
    Y: float
    k: int
    empirical: float
    empirical_stderr: float
    envelope: float


class TailComparison(BaseModel):
    sigma: float
    T: float
    tau: float
    direction: Literal["modulus", "argument"]
    p_empirical: float
    p_empirical_stderr: float
    p_model: float
    p_model_stderr: float


# Discrepancy
class DiscrepancyReport(BaseModel):
    sigma: float
    T: Optional[float] = None
    D_hat: float = Field(ge=0, le=1)
    grid_resolution: int
    emp_count: int
    model_count: int
    stat_err: float = Field(gt=0)
    grid_slack: float = Field(description="4x the largest marginal cell probability")
    rect_argmax: Optional[Rectangle] = None
    predicted_rate: Optional[float] = None


class DecayTrendReport(BaseModel):
    sigma: float
    reports: List[DiscrepancyReport]
    slope: float
    slope_ci_low: float
    slope_ci_high: float
    strictly_decreasing: bool


# a-points
class WindingBlock(BaseModel):
    t_lo: float
    t_hi: float
    count: int
    residual: float
    refinements: int
    retries: int = 0


class FunctionEstimate(BaseModel):
    value: float
    stderr: float


class ApointCensus(BaseModel):
    a: ComplexNumber
    sigma1: float
    sigma2: float
    T: float
    count: int = Field(ge=0)
    predicted_density: float
    predicted_count: float
    density_stderr: float
    contour_refinements: int
    max_residual: float
    blocks: List[WindingBlock] = Field(default_factory=list)

    @model_validator(mode="after")
    def _strip(self):
        if self.a == 0:
            raise ValueError("a must be nonzero")
        if not (0.5 < self.sigma1 < self.sigma2 < 1):
            raise ValueError("need 1/2 < sigma1 < sigma2 < 1")
        return self


class LittlewoodReport(BaseModel):
    a: ComplexNumber
    sigma: float
    T: float
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    gap_over_error: float


class LittlewoodRectangleReport(BaseModel):
    a: ComplexNumber
    sigma1: float
    sigma2: float
    T1: float
    T2: float
    contour_side: float = Field(description="Vertical log integrals plus horizontal argument integrals")
    root_side: float = Field(description="2 pi sum of (beta - sigma1) over located a-points")
    roots: List[ComplexNumber]


# CLI
class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sigma: float = Field(default=0.75, gt=0.5, le=1.0, description="sigma must lie in (1/2, 1]")
    T: float = Field(default=1e4, ge=100, le=1e12, description="T must lie in [100, 1e12]")
    T_list: List[float] = Field(default_factory=lambda: [1e3, 1e4, 1e5, 1e6], description="ascending, at least 3 values")
    a_re: float = Field(default=2.0)
    a_im: float = Field(default=0.0)
    sigma1: float = Field(default=0.55, gt=0.5, lt=1.0, description="sigma1 must lie in (1/2, 1)")
    sigma2: float = Field(default=0.95, gt=0.5, lt=1.0, description="sigma2 must lie in (1/2, 1)")
    z_re: float = Field(default=2.0, ge=-1e3, le=1e3)
    z_im: float = Field(default=0.0, ge=-1e3, le=1e3)
    tau: float = Field(default=1.5, ge=0.1)
    u: float = Field(default=1.0, ge=-1e3, le=1e3)
    v: float = Field(default=0.0, ge=-1e3, le=1e3)
    h: float = Field(default=0.01, gt=0)
    samples: int = Field(default=10**4, ge=100, le=10**8)
    model_samples: int = Field(default=10**5, ge=100, le=10**8)
    mc_samples: int = Field(default=10**6, ge=100, le=10**9)
    prime_limit: int = Field(default=10**6, ge=2, le=10**9)
    model_prime_cap: int = Field(default=2 * 10**4, ge=2, le=10**8)
    tail_mode: Literal["drop", "gaussian-compensate"] = "gaussian-compensate"
    seed: int = Field(default=12345, ge=0, lt=2**64)
    backend: Literal["auto", "full-zeta", "dirichlet-RY"] = "auto"
    Y_policy: Literal["logT_pow4", "explicit"] = "logT_pow4"
    Y: Optional[float] = Field(default=None, gt=1)
    grid: int = Field(default=64, ge=16, le=512)
    output_dir: str = "data/runs"
    format: Literal["csv", "json", "both"] = "both"
    emit_plots: Literal["none", "gnuplot"] = "none"
    threads: int = Field(default=1, ge=1, le=1024)
    scale: Literal["quick", "full"] = "quick"

    @model_validator(mode="after")
    def _consistent(self):
        if self.sigma1 >= self.sigma2:
            raise ValueError("sigma1 must be below sigma2")
        if self.Y_policy == "explicit" and self.Y is None:
            raise ValueError("Y_policy=explicit needs Y")
        if len(self.T_list) < 3 or any(b <= a for a, b in zip(self.T_list, self.T_list[1:])):
            raise ValueError("T_list must be ascending with at least 3 values")
        return self

    @property
    def a(self) -> complex:
        return complex(self.a_re, self.a_im)


class RunManifest(BaseModel):
    subcommand: str
    inputs: dict
    seed: int
    versions: dict
    wall_time_seconds: float
    started_at: str
    artifacts: List[str]


class AcceptanceResult(BaseModel):
    name: str
    passed: bool
    detail: str
    seconds: float


class SelftestReport(BaseModel):
    scale: Literal["quick", "full"]
    results: List[AcceptanceResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)
