"""
Normal and chi-square distribution functions used for p-values and Z_alpha.

The sphericity and power modules call these through the module object
(`distributions.normal_cdf`) so the validation suite can substitute a faulty
implementation as a negative control.
"""

from __future__ import annotations

import math

from scipy import optimize, special

from panel_sphericity.errors import DomainError

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Phi(x) through the complementary error function, accurate in both tails."""
    return float(0.5 * special.erfc(-x / _SQRT2))


def normal_sf(x: float) -> float:
    """1 - Phi(x), evaluated as Phi(-x) so the upper tail keeps full relative precision."""
    return normal_cdf(-x)


def chi2_upper_tail(x: float, df: float) -> float:
    """P(chi^2_df > x) via the regularized upper incomplete gamma function."""
    if df <= 0:
        raise DomainError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def z_alpha(alpha: float) -> float:
    """Upper alpha quantile of N(0,1), found by bisection on normal_cdf to 1e-10."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    return float(
        optimize.bisect(lambda z: normal_cdf(z) - (1.0 - alpha), -40.0, 40.0, xtol=1e-10, maxiter=200)
    )


def upper_tail(x: float) -> float:
    """
    P(N(0,1) > x) clipped into [0, 1].

    Used for both one-sided p-values and power 1 - Phi(argument). The clip only
    matters when normal_cdf has been replaced by a faulty implementation.
    """
    return min(1.0, max(0.0, normal_sf(x)))
