"""
Declarative value types: covariance specs, error laws, factor alternatives,
experiment configs and the reports produced from them.
"""
from __future__ import annotations

import math
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator


def split_floats(value: Any) -> Any:
    """Accept `2,1,1` strings (config files, CLI) wherever a float list is expected."""
    if isinstance(value, str):
        return [float(part) for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float)):
        return [float(value)]
    return value


FloatList = Annotated[List[float], BeforeValidator(split_floats)]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ---------------------------------------------------------------------------
# Covariance specifications
# ---------------------------------------------------------------------------

class IdentityCovariance(_Frozen):
    """Sigma = scale * I_n (the null hypothesis)."""
    kind: Literal["identity"] = "identity"
    n: int = Field(..., ge=2, description="Cross-section dimension")
    scale: float = Field(1.0, gt=0, description="Common variance sigma_nu^2")

    @property
    def dim(self) -> int:
        return self.n


class SpikedFactorCovariance(_Frozen):
    """Sigma = base * (I_n + sum_j h_j e_j e_j')."""
    kind: Literal["spiked"] = "spiked"
    n: int = Field(..., ge=2, description="Cross-section dimension")
    base: float = Field(1.0, gt=0, description="Idiosyncratic variance sigma_eps^2")
    spikes: FloatList = Field(..., min_length=1, description="Spike sizes h_1..h_r")
    loadings: Literal["canonical", "random"] = Field(
        "canonical", description="Loading directions: first r basis vectors or random orthonormal"
    )
    loading_seed: int = Field(0, description="Seed for random orthonormal loadings")

    @field_validator("spikes")
    @classmethod
    def _check_spikes(cls, spikes: List[float]) -> List[float]:
        if any(not math.isfinite(h) or h <= 0 for h in spikes):
            raise ValueError("spikes must be strictly positive and finite")
        return spikes

    @model_validator(mode="after")
    def _check_rank(self) -> "SpikedFactorCovariance":
        if len(self.spikes) >= self.n:
            raise ValueError(f"number of spikes ({len(self.spikes)}) must be below n ({self.n})")
        return self

    @property
    def dim(self) -> int:
        return self.n


class DiagonalCovariance(_Frozen):
    """Sigma = diag(eigenvalues)."""
    kind: Literal["diagonal"] = "diagonal"
    eigenvalues: FloatList = Field(..., min_length=2, description="Diagonal entries lambda_1..lambda_n")

    @field_validator("eigenvalues")
    @classmethod
    def _check_positive(cls, values: List[float]) -> List[float]:
        if any(not math.isfinite(v) or v <= 0 for v in values):
            raise ValueError("diagonal eigenvalues must be strictly positive and finite")
        return values

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


class DenseCovariance(_Frozen):
    """An explicit symmetric positive semi-definite matrix."""
    kind: Literal["dense"] = "dense"
    matrix: List[List[float]] = Field(..., description="Row-major symmetric PSD matrix")

    @model_validator(mode="after")
    def _check_square(self) -> "DenseCovariance":
        n = len(self.matrix)
        if n < 2 or any(len(row) != n for row in self.matrix):
            raise ValueError("dense covariance must be a square matrix of order >= 2")
        return self

    @property
    def dim(self) -> int:
        return len(self.matrix)


CovarianceSpec = Annotated[
    Union[IdentityCovariance, SpikedFactorCovariance, DiagonalCovariance, DenseCovariance],
    Field(discriminator="kind"),
]


# ---------------------------------------------------------------------------
# Disturbance laws and factor alternatives
# ---------------------------------------------------------------------------

class ErrorDistribution(_Frozen):
    """Standardized (mean 0, variance 1) law of the z_it entries."""
    kind: Literal["gaussian", "gamma", "uniform", "rademacher"] = "gaussian"
    shape: float = Field(4.0, gt=0, description="Shape a of the standardized gamma law")

    @property
    def gamma4(self) -> float:
        """Analytic fourth moment E z^4."""
        if self.kind == "gaussian":
            return 3.0
        if self.kind == "gamma":
            return 3.0 + 6.0 / self.shape
        if self.kind == "uniform":
            return 1.8
        return 1.0

    @property
    def label(self) -> str:
        return f"gamma({self.shape:g})" if self.kind == "gamma" else self.kind


class FactorAlternative(_Frozen):
    """Factor-model alternative nu_it = sum_j xi_ij f_tj + eps_it."""
    r: Optional[int] = Field(None, ge=1, description="Fixed number of factors; None means floor(tau*n)")
    tau: float = Field(0.0, ge=0, lt=1, description="Factor-count rate r = floor(tau*n)")
    h: FloatList = Field(default_factory=list, description="Constant spike sizes (broadcast when length 1)")
    d: FloatList = Field(default_factory=lambda: [1.0], description="Spike multipliers for h_j = d_j n^alpha")
    alpha: float = Field(0.0, ge=0, le=1, description="Spike growth exponent; 1 is the strong-factor case")
    factor_variances: FloatList = Field(default_factory=lambda: [1.0], description="sigma_j^2 of the factors")
    sigma_eps2: float = Field(1.0, gt=0, description="Idiosyncratic variance sigma_eps^2")
    loadings: Literal["canonical", "random"] = "canonical"

    @field_validator("h", "d")
    @classmethod
    def _check_non_negative(cls, values: List[float]) -> List[float]:
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValueError("spike sizes must be finite and non-negative")
        return values

    @field_validator("factor_variances")
    @classmethod
    def _check_variances(cls, values: List[float]) -> List[float]:
        if not values or any(v <= 0 for v in values):
            raise ValueError("factor variances must be strictly positive")
        return values

    @model_validator(mode="after")
    def _check_count_rule(self) -> "FactorAlternative":
        if self.r is None and self.tau <= 0:
            raise ValueError("either r or a positive tau is required")
        return self

    def rank(self, n: int) -> int:
        return self.r if self.r is not None else int(math.floor(self.tau * n))

    def spikes(self, n: int) -> List[float]:
        """Evaluate the spike-size rule at dimension n."""
        r = self.rank(n)
        if self.h:
            values = self.h if len(self.h) == r else _broadcast(self.h, r, "h")
        else:
            scale = float(n) ** self.alpha
            values = [dj * scale for dj in _broadcast(self.d, r, "d")]
        return [float(v) for v in values]

    def factor_variance(self, r: int) -> List[float]:
        return _broadcast(self.factor_variances, r, "factor_variances")

    @property
    def moment_regime(self) -> str:
        """Moment condition required by the unbounded-norm CLT: 4*alpha + tau <= 1 needs E|z|^6 only."""
        return "sixth-moment" if 4 * self.alpha + self.tau <= 1 else "sixteenth-moment"

    @property
    def setting(self) -> str:
        if self.alpha >= 1:
            return "strong"
        if self.alpha > 0:
            return "intermediate-s3"
        return "divergent-s2" if self.r is None else "weak-s1"


def _broadcast(values: List[float], r: int, name: str) -> List[float]:
    if len(values) == 1:
        return [float(values[0])] * r
    if len(values) != r:
        raise ValueError(f"{name} has {len(values)} entries but r = {r}")
    return [float(v) for v in values]


# ---------------------------------------------------------------------------
# Trace bundles
# ---------------------------------------------------------------------------

class SampleTracePair(_Frozen):
    """tr S_T and tr S_T^2 of a sample covariance matrix."""
    tr_s: float = Field(..., ge=0)
    tr_s2: float = Field(..., ge=0)
    n: int = Field(..., ge=1)
    T: int = Field(..., ge=1)

    def scaled(self, c: float) -> "SampleTracePair":
        return SampleTracePair(tr_s=c * c * self.tr_s, tr_s2=c ** 4 * self.tr_s2, n=self.n, T=self.T)


class SigmaTraces(_Frozen):
    """Trace functionals of a population covariance matrix."""
    tr1: float = Field(..., description="tr Sigma")
    tr2: float = Field(..., description="tr Sigma^2")
    tr3: float = Field(..., description="tr Sigma^3")
    tr4: float = Field(..., description="tr Sigma^4")
    had11: float = Field(..., description="tr(Sigma o Sigma)")
    had12: float = Field(..., description="tr(Sigma o Sigma^2)")
    had22: float = Field(..., description="tr(Sigma^2 o Sigma^2)")
    n: int


class MomentSet(_Frozen):
    """Spectral moments feeding the supplementary general-covariance formulas."""
    theta: Tuple[float, float, float, float]
    eta: Tuple[float, float, float]
    vartheta: Tuple[float, float]
    c: float


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

TestVariant = Literal["classic-chi2", "raw-lpa-ulpa", "grj", "rj"]


class TestReport(_Frozen):
    """Outcome of one sphericity test invocation."""
    __test__ = False

    u: float = Field(..., ge=0, description="U or U-hat")
    standardized: float = Field(..., description="Centred and scaled statistic")
    p_value: float = Field(..., ge=0, le=1)
    variant: TestVariant
    n: int
    T: int
    c_T: float
    j: Optional[float] = Field(None, description="Centred statistic J before halving")
    gamma4_hat: Optional[float] = None
    notes: str = ""

    def rejects(self, alpha: float) -> bool:
        return self.p_value < alpha

    def as_lines(self) -> List[str]:
        data = self.model_dump()
        return [f"{key}={fmt_value(value)}" for key, value in data.items() if value is not None]


class H1StarMoments(_Frozen):
    """Centering and scale of TU under the unbounded-norm alternative."""
    mu: float
    sigma2: float = Field(..., gt=0)
    theta1: float
    theta2: float
    omega1: float
    omega2: float
    omega3: float
    as_printed: bool = False

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


class PowerResult(_Frozen):
    """Asymptotic power of the one-sided test."""
    power: float = Field(..., ge=0, le=1)
    alpha: float
    scenario: str
    inputs: Dict[str, Any] = Field(default_factory=dict)
    argument: Optional[float] = Field(None, description="Argument of Phi in 1 - Phi(.)")


class SupplementaryPower(_Frozen):
    """Limit law and power of John's test under a general bounded-norm covariance."""
    s2: float
    center: float
    power: float = Field(..., ge=0, le=1)
    branch: Literal["gaussian", "diagonal"]
    identity_variance_standard: float = Field(..., description="s^2 at Sigma = I with vartheta_2 = 1 + c")
    identity_variance_centered: float = Field(..., description="s^2 at Sigma = I with vartheta_2 = c")
    notes: str = ""


# ---------------------------------------------------------------------------
# Monte-Carlo experiments
# ---------------------------------------------------------------------------

Scenario = Literal["null", "weak-s1", "divergent-s2", "intermediate-s3", "strong", "general-cov"]
SCENARIOS: Tuple[str, ...] = ("null", "weak-s1", "divergent-s2", "intermediate-s3", "strong", "general-cov")


class McConfig(_Frozen):
    """One Monte-Carlo experiment."""
    scenario: Scenario = "null"
    n: Optional[int] = Field(None, ge=2, description="Cross-section size; None means ceil(T^delta)")
    T: int = Field(100, ge=2)
    delta: Optional[float] = Field(None, gt=1, lt=2, description="ULPA rule n = ceil(T^delta)")
    reps: int = Field(1000, ge=1)
    seed: int = 0
    dist: Literal["gaussian", "gamma", "uniform", "rademacher"] = "gaussian"
    gamma_shape: float = Field(4.0, gt=0)
    alpha: float = Field(0.05, gt=0, lt=1)
    r: Optional[int] = Field(None, ge=1)
    tau: float = Field(0.0, ge=0, lt=1)
    h: FloatList = Field(default_factory=list)
    d: FloatList = Field(default_factory=lambda: [1.0])
    factor_alpha: float = Field(0.0, ge=0, le=1)
    sigma_eps2: float = Field(1.0, gt=0)
    loadings: Literal["canonical", "random"] = "canonical"
    covariance: Optional[str] = Field(None, description="general-cov spectrum, e.g. diagonal:2,1,1,1")
    noise_scale: float = Field(1.0, ge=0, description="Multiplier on the disturbances (0 gives a noiseless panel)")
    k: int = Field(2, ge=1, le=16)
    beta: FloatList = Field(default_factory=lambda: [1.0, -0.5])
    regressors: Literal["normal", "uniform"] = "normal"
    mode: Literal["residual", "raw"] = "residual"

    @model_validator(mode="after")
    def _check_consistency(self) -> "McConfig":
        if self.n is None and self.delta is None:
            raise ValueError("either n or delta must be given")
        if len(self.beta) != self.k:
            raise ValueError(f"beta has {len(self.beta)} entries but k = {self.k}")
        if self.scenario == "general-cov" and not self.covariance:
            raise ValueError("scenario general-cov requires a covariance key")
        if self.scenario == "weak-s1" and self.r is None and not self.h:
            raise ValueError("scenario weak-s1 requires r or h")
        if self.scenario == "divergent-s2" and self.tau <= 0:
            raise ValueError("scenario divergent-s2 requires tau > 0")
        return self

    @property
    def size(self) -> int:
        if self.n is not None:
            return self.n
        return int(math.ceil(self.T ** self.delta))

    @property
    def error_distribution(self) -> ErrorDistribution:
        return ErrorDistribution(kind=self.dist, shape=self.gamma_shape)

    def factor_alternative(self) -> FactorAlternative:
        """The factor alternative implied by the scenario keys."""
        if self.scenario == "weak-s1":
            r = self.r if self.r is not None else len(self.h)
            return FactorAlternative(r=r, h=self.h, sigma_eps2=self.sigma_eps2, loadings=self.loadings)
        if self.scenario == "divergent-s2":
            return FactorAlternative(tau=self.tau, h=self.h or [1.0], sigma_eps2=self.sigma_eps2,
                                     loadings=self.loadings)
        if self.scenario in ("intermediate-s3", "strong"):
            alpha = 1.0 if self.scenario == "strong" else self.factor_alpha
            return FactorAlternative(r=self.r or 1, d=self.d, alpha=alpha,
                                     sigma_eps2=self.sigma_eps2, loadings=self.loadings)
        raise ValueError(f"scenario {self.scenario} has no factor alternative")


class GapStats(_Frozen):
    """Distribution of T(U_hat - U) - c_T across replications."""
    mean: float
    median: float
    median_abs: float


class McSummary(_Frozen):
    """Aggregated outcome of one experiment."""
    scenario: str
    mode: str
    n: int
    T: int
    reps: int
    completed: int
    failures: Dict[str, int] = Field(default_factory=dict)
    rejection_rate: Optional[float] = Field(None, ge=0, le=1)
    mean_J: Optional[float] = None
    var_J: Optional[float] = None
    skew_J: Optional[float] = None
    ks_statistic: Optional[float] = None
    mean_TU_minus_n: Optional[float] = None
    var_TU: Optional[float] = None
    gap: Optional[GapStats] = None
    theory_power: Optional[float] = None
    theory_center: Optional[float] = None
    theory_variance: Optional[float] = None
    all_degenerate: bool = False
    csv_path: Optional[str] = None

    def as_lines(self) -> List[str]:
        lines = []
        for key, value in self.model_dump().items():
            if key == "gap":
                if value is not None:
                    lines.extend(f"gap_{k}={fmt_value(v)}" for k, v in value.items())
                continue
            if key == "failures":
                lines.extend(f"failures_{k}={v}" for k, v in sorted(value.items()))
                continue
            if value is not None:
                lines.append(f"{key}={fmt_value(value)}")
        return lines


class GapPoint(_Frozen):
    n: int
    T: int
    stats: GapStats
    median_raw: float = Field(..., description="Median of T(U_hat - U) without the c_T offset")


class GapStudy(_Frozen):
    """Scaling study of the residual drift T(U_hat - U)."""
    scenario: str
    expectation: Literal["shrinking", "bounded", "growing"]
    exponent: Optional[float] = None
    points: List[GapPoint]
    passed: bool
    detail: str = ""


def fmt_value(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)
