"""
Monte-Carlo experiments: size, power, limit-law diagnostics and residual drift.

Each replication draws from its own (seed, rep) streams, so the per-rep records
are identical at any thread count. Failed replications are recorded with a
reason code and excluded from the aggregates, never resampled.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy import stats

from panel_sphericity.core import records
from panel_sphericity.core.console import get_logger
from panel_sphericity.core.power import (
    h1star_moments,
    is_diagonal,
    supp_general_covariance,
    theory_power,
    weak_lpa_center,
)
from panel_sphericity.core.simulation import (
    factor_covariance,
    gen_disturbances,
    gen_factor_disturbances,
    gen_panel,
)
from panel_sphericity.core.spectra import DisturbanceMatrix, moment_set, sample_traces, sigma_traces
from panel_sphericity.core.sphericity import grj_test, john_u, raw_panel_test
from panel_sphericity.core.within import gamma4_hat, within_ols
from panel_sphericity.errors import (
    ConfigError,
    DegenerateInputError,
    DiagnosticError,
    DomainError,
    EstimationError,
    UnsupportedCaseError,
)
from panel_sphericity.models import (
    SCENARIOS,
    CovarianceSpec,
    DiagonalCovariance,
    GapPoint,
    GapStats,
    GapStudy,
    IdentityCovariance,
    McConfig,
    McSummary,
    SpikedFactorCovariance,
)

logger = get_logger(__name__)

MIN_DIAGNOSTIC_SAMPLES = 30

DEFAULT_GAP_SIZES = (50, 100, 200)
GROWTH_GAP_SIZES = (100, 400)


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

def parse_config_text(text: str, overrides: Optional[Dict[str, object]] = None) -> McConfig:
    """Parse `key=value` lines (with `#` comments) into an McConfig."""
    values: Dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    unknown = sorted(set(values) - set(McConfig.model_fields))
    if unknown:
        raise ConfigError(
            f"unknown config keys {', '.join(unknown)}; valid keys are {', '.join(McConfig.model_fields)}"
        )
    if "scenario" in values and values["scenario"] not in SCENARIOS:
        raise ConfigError(f"unknown scenario {values['scenario']!r}; valid scenarios are {', '.join(SCENARIOS)}")
    try:
        return McConfig(**values)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc


def load_mc_config(path: Union[str, Path], overrides: Optional[Dict[str, object]] = None) -> McConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, overrides)


def parse_covariance(text: str, n: int) -> CovarianceSpec:
    """
    Build a covariance spec of dimension n from a short description.

    `diagonal:2,1,1,1` tiles the listed eigenvalues cyclically to length n,
    `identity:s` is s*I, and `spiked:h1,h2` is I plus canonical spikes.
    """
    kind, _, body = text.partition(":")
    kind = kind.strip()
    try:
        numbers = [float(part) for part in body.split(",") if part.strip()]
        if kind == "identity":
            return IdentityCovariance(n=n, scale=numbers[0] if numbers else 1.0)
        if kind == "diagonal" and numbers:
            return DiagonalCovariance(eigenvalues=[numbers[i % len(numbers)] for i in range(n)])
        if kind == "spiked" and numbers:
            return SpikedFactorCovariance(n=n, spikes=numbers)
    except (ValueError, ValidationError) as exc:
        raise ConfigError(f"invalid covariance {text!r}: {exc}") from exc
    raise ConfigError(f"invalid covariance {text!r}; expected identity:s, diagonal:l1,l2,... or spiked:h1,...")


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RepRecord:
    """One replication; failed reps carry a reason code and NaN statistics."""

    rep: int
    U: float = math.nan
    U_hat: float = math.nan
    gamma4_hat: float = math.nan
    J: float = math.nan
    p_value: float = math.nan
    gap: float = math.nan
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def replication_disturbances(cfg: McConfig, rep: int) -> DisturbanceMatrix:
    n, T = cfg.size, cfg.T
    dist = cfg.error_distribution
    if cfg.scenario == "null":
        v = gen_disturbances(IdentityCovariance(n=n, scale=cfg.sigma_eps2), dist, n, T, cfg.seed, (rep,))
    elif cfg.scenario == "general-cov":
        v = gen_disturbances(parse_covariance(cfg.covariance, n), dist, n, T, cfg.seed, (rep,))
    else:
        v = gen_factor_disturbances(cfg.factor_alternative(), dist, n, T, cfg.seed, (rep,))
    if cfg.noise_scale != 1.0:
        v = DisturbanceMatrix(cfg.noise_scale * v.values)
    return v


def run_replication(cfg: McConfig, rep: int) -> RepRecord:
    """Generate, fit and test one replication."""
    try:
        v = replication_disturbances(cfg, rep)
        n, T = v.n, v.T
        u = john_u(sample_traces(v))
        if cfg.mode == "raw":
            report = raw_panel_test(u, cfg.error_distribution.gamma4, n, T)
            return RepRecord(
                rep=rep, U=u, gamma4_hat=gamma4_hat(v.values, standardize=True),
                J=report.j, p_value=report.p_value,
            )
        panel = gen_panel(cfg.beta, v, cfg.seed, (rep,), regressors=cfg.regressors)
        report = grj_test(within_ols(panel))
        return RepRecord(
            rep=rep, U=u, U_hat=report.u, gamma4_hat=report.gamma4_hat,
            J=report.j, p_value=report.p_value, gap=T * (report.u - u) - n / T,
        )
    except DegenerateInputError:
        return RepRecord(rep=rep, failure="degenerate")
    except DomainError:
        return RepRecord(rep=rep, failure="domain")
    except EstimationError:
        return RepRecord(rep=rep, failure="estimation")


def run_replications(cfg: McConfig, threads: int = 1) -> List[RepRecord]:
    """All replications of cfg, ordered by replication index."""
    if threads <= 1:
        return [run_replication(cfg, rep) for rep in range(cfg.reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda rep: run_replication(cfg, rep), range(cfg.reps)))
    return sorted(results, key=lambda record: record.rep)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Diagnostics:
    mean: float
    var: float
    skew: float
    ks: float
    constant: bool


def distribution_diagnostics(samples: Iterable[float]) -> Diagnostics:
    """
    Mean, variance, skewness and the two-sided KS statistic against N(0,1).

    Raises:
        DiagnosticError: Fewer than 30 finite samples
    """
    values = np.asarray(list(samples), dtype=np.float64)
    values = values[np.isfinite(values)]
    if values.size < MIN_DIAGNOSTIC_SAMPLES:
        raise DiagnosticError(f"need at least {MIN_DIAGNOSTIC_SAMPLES} samples, got {values.size}")
    var = float(np.var(values, ddof=1))
    constant = bool(np.all(values == values[0]))
    return Diagnostics(
        mean=float(np.mean(values)),
        var=0.0 if constant else var,
        skew=0.0 if constant else float(stats.skew(values)),
        ks=float(stats.kstest(values, "norm").statistic),
        constant=constant,
    )


def gap_stats(gaps: Sequence[float]) -> GapStats:
    values = np.asarray(gaps, dtype=np.float64)
    return GapStats(
        mean=float(np.mean(values)),
        median=float(np.median(values)),
        median_abs=float(np.median(np.abs(values))),
    )


def theory_values(cfg: McConfig) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """
    Predicted (power, mean of T U - n, variance of T U) for cfg.

    In residual mode the mean includes the c_T drift of T U_hat. Values the
    closed forms do not cover are None.
    """
    n, T = cfg.size, cfg.T
    gamma4 = cfg.error_distribution.gamma4
    drift = n / T if cfg.mode == "residual" else 0.0
    try:
        if cfg.scenario == "null":
            return cfg.alpha, gamma4 - 2.0 + drift, 4.0
        if cfg.scenario == "general-cov":
            spec = parse_covariance(cfg.covariance, n)
            moments = moment_set(spec, T)
            supp = supp_general_covariance(
                moments.theta, moments.vartheta, moments.c, T, gamma4, is_diagonal(spec), cfg.alpha
            )
            return supp.power, supp.center - n + drift, supp.s2
        alternative = cfg.factor_alternative()
        power = theory_power(alternative, n, T, gamma4, cfg.alpha).power
        if alternative.setting == "weak-s1":
            return power, weak_lpa_center(alternative.spikes(n), n, T, gamma4) - n - n / T + drift, 4.0
        moments = h1star_moments(sigma_traces(factor_covariance(alternative, n)), gamma4, n, T)
        return power, T * moments.mu - n + drift, moments.sigma2
    except (DomainError, UnsupportedCaseError) as exc:
        logger.warning(f"[Harness] No closed-form theory for {cfg.scenario}: {exc}")
        return None, None, None


def summarize(cfg: McConfig, reps: Sequence[RepRecord], csv_path: Optional[str] = None) -> McSummary:
    """Aggregate ordered replication records into an McSummary."""
    n, T = cfg.size, cfg.T
    failures: Dict[str, int] = {}
    for record in reps:
        if record.failure:
            failures[record.failure] = failures.get(record.failure, 0) + 1
    done = [record for record in reps if record.ok]
    power, center, variance = theory_values(cfg)
    base = dict(
        scenario=cfg.scenario, mode=cfg.mode, n=n, T=T, reps=cfg.reps, completed=len(done),
        failures=failures, theory_power=power, theory_center=center, theory_variance=variance,
        csv_path=csv_path,
    )
    if not done:
        logger.warning(f"[Harness] All {cfg.reps} replications failed: {failures}")
        return McSummary(all_degenerate=True, **base)

    j = np.array([record.J for record in done])
    stat = np.array([record.U if cfg.mode == "raw" else record.U_hat for record in done])
    tu = T * stat
    extra: Dict[str, object] = dict(
        rejection_rate=float(np.mean([record.p_value < cfg.alpha for record in done])),
        mean_J=float(np.mean(j)),
        mean_TU_minus_n=float(np.mean(tu - n)),
    )
    if len(done) > 1:
        extra["var_J"] = float(np.var(j, ddof=1))
        extra["var_TU"] = float(np.var(tu, ddof=1))
    if len(done) >= MIN_DIAGNOSTIC_SAMPLES:
        diagnostics = distribution_diagnostics(j / 2.0)
        extra["skew_J"] = diagnostics.skew
        extra["ks_statistic"] = diagnostics.ks
    if cfg.mode == "residual":
        extra["gap"] = gap_stats([record.gap for record in done])
    return McSummary(**base, **extra)


def run_experiment(
    cfg: McConfig,
    threads: int = 1,
    csv_path: Optional[Union[str, Path]] = None,
) -> McSummary:
    """
    Run every replication of cfg and aggregate.

    Args:
        cfg: Experiment configuration
        threads: Worker threads; results do not depend on it
        csv_path: Where to write the per-rep CSV (skipped when None)

    Returns:
        McSummary with empirical and theoretical values
    """
    logger.info(f"[Harness] {cfg.scenario} n={cfg.size} T={cfg.T} reps={cfg.reps} threads={threads}")
    reps = run_replications(cfg, threads)
    written = None
    if csv_path is not None:
        written = str(records.write_rep_csv(reps, csv_path))
        logger.info(f"[Harness] Per-rep records saved: {written}")
    return summarize(cfg, reps, written)


# ---------------------------------------------------------------------------
# Residual drift scaling
# ---------------------------------------------------------------------------

def _gap_expectation(cfg: McConfig) -> Tuple[str, Optional[float]]:
    if cfg.scenario in ("divergent-s2", "general-cov"):
        return "bounded", None
    if cfg.scenario in ("intermediate-s3", "strong"):
        alpha = cfg.factor_alternative().alpha
        if alpha >= 0.5:
            return "growing", 2.0 * alpha - 1.0
    return "shrinking", None


def gap_check(cfg: McConfig, sizes: Optional[Sequence[int]] = None, threads: int = 1) -> GapStudy:
    """
    Scaling study of T(U_hat - U) - c_T over n = T in sizes.

    Expectations: shrinking under the null, weak factors and slowly growing
    spikes; bounded for tau * n factors and general covariances; growing like
    n^(2 alpha - 1) for spikes n^alpha with alpha >= 1/2 (ratio checked within
    a factor of 2 between the smallest and largest size).
    """
    if cfg.mode != "residual":
        raise ConfigError("gap_check needs residual mode, which keeps the true disturbances")
    expectation, exponent = _gap_expectation(cfg)
    if sizes is None:
        sizes = GROWTH_GAP_SIZES if expectation == "growing" else DEFAULT_GAP_SIZES
    points: List[GapPoint] = []
    for size in sizes:
        sized = cfg.model_copy(update={"n": int(size), "T": int(size), "delta": None})
        done = [record for record in run_replications(sized, threads) if record.ok]
        if not done:
            raise ConfigError(f"no successful replications at n = T = {size}")
        gaps = [record.gap for record in done]
        raw = [record.gap + sized.size / sized.T for record in done]
        points.append(GapPoint(n=sized.size, T=sized.T, stats=gap_stats(gaps), median_raw=float(np.median(raw))))
        logger.info(f"[Harness] gap n=T={size}: median |gap| = {points[-1].stats.median_abs:.4g}")

    medians = [point.stats.median_abs for point in points]
    if expectation == "shrinking":
        passed = all(later < earlier for earlier, later in zip(medians, medians[1:]))
        detail = "median |gap| must decrease strictly"
    elif expectation == "bounded":
        passed = max(medians) <= 2.0 * max(1.0, medians[0])
        detail = "median |gap| must stay within twice its first value (floor 1)"
    else:
        predicted = (points[-1].n / points[0].n) ** exponent
        observed = medians[-1] / medians[0] if medians[0] > 0 else math.inf
        passed = predicted / 2.0 <= observed <= predicted * 2.0
        detail = f"growth ratio {observed:.4g} vs predicted {predicted:.4g}"
    return GapStudy(
        scenario=cfg.scenario, expectation=expectation, exponent=exponent,
        points=points, passed=passed, detail=detail,
    )
