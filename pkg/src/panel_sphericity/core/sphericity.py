"""
John's sphericity statistic and the tests built on it.

Every test rejects for large U (right tail). The residual-based test uses one
formula regardless of how n compares with T.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from panel_sphericity.core import distributions
from panel_sphericity.core.distributions import z_alpha  # noqa: F401  re-exported for callers
from panel_sphericity.core.simulation import PanelData
from panel_sphericity.core.spectra import DisturbanceMatrix, sample_traces
from panel_sphericity.core.within import WithinFit, gamma4_hat, residual_traces, within_ols
from panel_sphericity.errors import DegenerateInputError, DomainError, InputError
from panel_sphericity.models import SampleTracePair, TestReport

# Beyond this n the chi-square df exceeds ~5e5 and the normal limit should be used.
MAX_CLASSIC_N = 1000

# Residual sum of squares below this fraction of the demeaned total counts as a perfect fit.
DEGENERATE_RATIO = 1e-20

Drift = Literal["n/T", "n/(T-1)"]


def john_u(tp: SampleTracePair) -> float:
    """U = (tr S^2 / n) (tr S / n)^-2 - 1; invariant to rescaling the data."""
    if tp.tr_s <= 0:
        raise DegenerateInputError("tr S is zero: the data are identically zero")
    mean1 = tp.tr_s / tp.n
    mean2 = tp.tr_s2 / tp.n
    return max(0.0, mean2 / (mean1 * mean1) - 1.0)


def classic_john_test(u: float, n: int, T: int) -> TestReport:
    """Fixed-n test: nTU/2 against chi^2 with n(n+1)/2 - 1 degrees of freedom."""
    if n < 2 or T < 2:
        raise InputError(f"need n >= 2 and T >= 2, got n={n}, T={T}")
    if n > MAX_CLASSIC_N:
        raise DomainError(
            f"n = {n} is too large for the chi-square calibration; use the raw or grj variant"
        )
    df = n * (n + 1) // 2 - 1
    statistic = n * T * u / 2.0
    return TestReport(
        u=u,
        standardized=statistic,
        p_value=distributions.chi2_upper_tail(statistic, df),
        variant="classic-chi2",
        n=n,
        T=T,
        c_T=n / T,
        notes=f"df={df}",
    )


def raw_panel_test(u: float, gamma4: float, n: int, T: int) -> TestReport:
    """
    Large-panel test on raw disturbances: (TU - n - (gamma4 - 2)) / 2 against N(0,1).

    The same calibration holds whether n/T converges or diverges.
    """
    j = T * u - n - (gamma4 - 2.0)
    standardized = j / 2.0
    return TestReport(
        u=u,
        standardized=standardized,
        p_value=distributions.upper_tail(standardized),
        variant="raw-lpa-ulpa",
        n=n,
        T=T,
        c_T=n / T,
        j=j,
        gamma4_hat=gamma4,
    )


def _check_fit(fit: WithinFit) -> None:
    rss = fit.residual_ss
    if rss == 0.0 or rss <= DEGENERATE_RATIO * fit.total_ss:
        raise DegenerateInputError("residuals are identically zero (perfect fit); U_hat is undefined")


def grj_test(fit: WithinFit, drift: Drift = "n/T") -> TestReport:
    """
    General residual-based John test.

    J = T U_hat - n - (gamma4_hat + c_T - 2) with J/2 compared against N(0,1).
    gamma4_hat is computed on residuals standardized by their overall second
    moment. drift="n/(T-1)" swaps c_T for the Gaussian residual drift, for
    comparison with the rj variant.
    """
    _check_fit(fit)
    n, T = fit.n, fit.T
    u_hat = john_u(residual_traces(fit))
    g4 = gamma4_hat(fit.residuals, standardize=True)
    shift = n / T if drift == "n/T" else n / (T - 1)
    j = T * u_hat - n - (g4 + shift - 2.0)
    standardized = j / 2.0
    return TestReport(
        u=u_hat,
        standardized=standardized,
        p_value=distributions.upper_tail(standardized),
        variant="grj",
        n=n,
        T=T,
        c_T=n / T,
        j=j,
        gamma4_hat=g4,
        notes="" if drift == "n/T" else "drift=n/(T-1)",
    )


def rj_test(fit: WithinFit) -> TestReport:
    """Gaussian residual-based test: J = T U_hat - n - n/(T-1) - 1."""
    _check_fit(fit)
    n, T = fit.n, fit.T
    u_hat = john_u(residual_traces(fit))
    j = T * u_hat - n - n / (T - 1) - 1.0
    standardized = j / 2.0
    return TestReport(
        u=u_hat,
        standardized=standardized,
        p_value=distributions.upper_tail(standardized),
        variant="rj",
        n=n,
        T=T,
        c_T=n / T,
        j=j,
    )


def panel_report(
    panel: PanelData,
    variant: str = "grj",
    gamma4: Optional[Union[float, str]] = "estimate",
) -> TestReport:
    """
    Run one variant on a parsed panel.

    `raw` and `classic` read y itself as the disturbance matrix; `grj` and `rj`
    fit the within regression first. gamma4 is a known value or "estimate".
    """
    if variant in ("grj", "rj"):
        fit = within_ols(panel)
        return grj_test(fit) if variant == "grj" else rj_test(fit)
    if variant not in ("raw", "classic"):
        raise InputError(f"unknown variant {variant!r}; expected grj, rj, raw or classic")

    v = DisturbanceMatrix(panel.y)
    u = john_u(sample_traces(v))
    if variant == "classic":
        return classic_john_test(u, v.n, v.T)
    if gamma4 is None or gamma4 == "estimate":
        g4 = gamma4_hat(v.values, standardize=True)
    else:
        try:
            g4 = float(gamma4)
        except ValueError as exc:
            raise InputError(f"gamma4 must be a number or 'estimate', got {gamma4!r}") from exc
    return raw_panel_test(u, g4, v.n, v.T)
