"""
Closed-form limit laws and asymptotic power of John's test.

Power is always that of the one-sided test rejecting when the standardized
statistic exceeds Z_alpha, written as 1 - Phi(argument).
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from panel_sphericity.core import distributions
from panel_sphericity.core.simulation import factor_covariance
from panel_sphericity.core.spectra import sigma_traces
from panel_sphericity.errors import DomainError, UnsupportedCaseError
from panel_sphericity.models import (
    CovarianceSpec,
    DenseCovariance,
    FactorAlternative,
    H1StarMoments,
    IdentityCovariance,
    PowerResult,
    SigmaTraces,
    SpikedFactorCovariance,
    SupplementaryPower,
)

# Relative slack when checking eta_2 >= eta_1^2 and B_2 >= B_1^2 on rounded inputs.
_SPECTRUM_RTOL = 1e-12


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")


def power_weak_lpa(h: Sequence[float], c_T: float, alpha: float = 0.05) -> PowerResult:
    """P1 = 1 - Phi(Z_alpha - sum(h^2) / (2 c_T)) for bounded spikes with n/T -> c."""
    _check_alpha(alpha)
    if c_T <= 0:
        raise DomainError("c_T must be positive")
    spikes = [float(v) for v in h]
    if any(v < 0 for v in spikes):
        raise DomainError("spike sizes must be non-negative")
    signal = math.fsum(v * v for v in spikes)
    argument = distributions.z_alpha(alpha) - signal / (2.0 * c_T)
    return PowerResult(
        power=distributions.upper_tail(argument),
        alpha=alpha,
        scenario="weak-s1",
        inputs={"h": spikes, "c_T": c_T, "sum_h2": signal},
        argument=argument,
    )


def _check_eta(eta: Sequence[float]) -> Tuple[float, float, float]:
    eta1, eta2, eta3 = (float(e) for e in eta)
    if eta1 <= 0:
        raise DomainError("eta_1 must be positive")
    if eta2 < eta1 * eta1 * (1.0 - _SPECTRUM_RTOL):
        raise DomainError(f"impossible spectrum: eta_2 = {eta2} < eta_1^2 = {eta1 * eta1}")
    return eta1, eta2, eta3


def power_weak_ulpa(eta: Sequence[float], gamma4: float, T: int, alpha: float = 0.05) -> PowerResult:
    """
    Power of the residual test when n/T diverges, in terms of eta_1..eta_3.

    argument = (eta1^2/eta2) Z_alpha + [eta1^2 (g4 - 2) - eta2 - eta3 (g4 - 3)] / (2 eta2)
               + (eta1^2 - eta2) T / (2 eta2)
    """
    _check_alpha(alpha)
    eta1, eta2, eta3 = _check_eta(eta)
    e11 = eta1 * eta1
    argument = (
        e11 / eta2 * distributions.z_alpha(alpha)
        + (e11 * (gamma4 - 2.0) - eta2 - eta3 * (gamma4 - 3.0)) / (2.0 * eta2)
        + (e11 - eta2) * T / (2.0 * eta2)
    )
    return PowerResult(
        power=distributions.upper_tail(argument),
        alpha=alpha,
        scenario="weak-ulpa",
        inputs={"eta1": eta1, "eta2": eta2, "eta3": eta3, "gamma4": gamma4, "T": T},
        argument=argument,
    )


def ulpa_weak_moments(eta: Sequence[float], gamma4: float, n: int, T: int) -> Tuple[float, float]:
    """
    Mean and variance of T U_hat for bounded spikes when n/T diverges.

    center = n + (eta2/eta1^2 - 1) T + (eta2 + eta3 (g4 - 3)) / eta1^2 + c_T
    variance = 4 eta2^2 / eta1^4
    """
    eta1, eta2, eta3 = _check_eta(eta)
    e11 = eta1 * eta1
    center = n + (eta2 / e11 - 1.0) * T + (eta2 + eta3 * (gamma4 - 3.0)) / e11 + n / T
    return center, 4.0 * eta2 * eta2 / (e11 * e11)


def weak_lpa_center(h: Sequence[float], n: int, T: int, gamma4_hat: float) -> float:
    """Mean of T U_hat under bounded spikes with n/T -> c: n + g4 + c_T - 2 + sum(h^2)/c_T."""
    c_T = n / T
    return n + gamma4_hat + c_T - 2.0 + math.fsum(float(v) ** 2 for v in h) / c_T


def h1star_moments(
    st: SigmaTraces,
    gamma4: float,
    n: int,
    T: int,
    as_printed: bool = False,
) -> H1StarMoments:
    """
    Centering mu and variance sigma^2 of T U under a general (possibly unbounded) Sigma.

    Finite-n traces are used throughout. By default omega_1 is the variance term
    T^-1 {(g4-3) tr(Sigma o Sigma) + 2 tr Sigma^2} and the prefactor is c_T^2,
    which gives sigma^2 = 4 + 8/(nT) at Sigma = I. as_printed=True uses
    omega_1 = T^-1 {(g4-3) tr(Sigma o Sigma) + 2 (tr Sigma)^2} and the prefactor
    1/c_T^2 instead.
    """
    if st.tr1 <= 0:
        raise DomainError("tr Sigma must be positive")
    c = n / T
    g = gamma4 - 3.0
    tr1, tr2, tr3, tr4 = st.tr1, st.tr2, st.tr3, st.tr4

    mu = c * (g * st.had11 + (T + 1) * tr2) / (tr1 * tr1) + c - 1.0
    theta1 = tr1
    theta2 = (g * st.had11 + tr1 * tr1 + (T + 1) * tr2) / T
    if as_printed:
        omega1 = (g * st.had11 + 2.0 * tr1 * tr1) / T
    else:
        omega1 = (g * st.had11 + 2.0 * tr2) / T
    omega2 = (4.0 * tr2 * tr1 + 2.0 * g * st.had11 * tr1 + 2.0 * T * g * st.had12 + 4.0 * T * tr3) / T ** 2
    omega3 = (
        8.0 * tr2 * tr1 ** 2
        + 4.0 * g * tr1 ** 2 * st.had11
        + 16.0 * T * tr1 * tr3
        + 4.0 * T * tr2 ** 2
        + 8.0 * T * g * st.had12 * tr1
        + 4.0 * T ** 2 * g * st.had22
        + 8.0 * T ** 2 * tr4
    ) / T ** 3

    t4 = float(T) ** 4
    bracket = (
        4.0 * t4 * theta2 ** 2 * omega1 / theta1 ** 6
        - 4.0 * t4 * theta2 * omega2 / theta1 ** 5
        + t4 * omega3 / theta1 ** 4
    )
    prefactor = 1.0 / (c * c) if as_printed else c * c
    sigma2 = prefactor * bracket
    if not sigma2 > 0:
        raise DomainError(f"variance evaluates to {sigma2}; inputs are outside the formula's range")
    return H1StarMoments(
        mu=mu, sigma2=sigma2, theta1=theta1, theta2=theta2,
        omega1=omega1, omega2=omega2, omega3=omega3, as_printed=as_printed,
    )


def power_s2(
    B1: float,
    B2: float,
    n: int,
    tau: float,
    gamma4: float,
    sigma: float,
    alpha: float = 0.05,
    nu4: Optional[float] = None,
) -> PowerResult:
    """
    Power when the number of factors grows like tau * n.

    argument = [2 Z_alpha + (1 + nu4)(1 - 1/tau) + n (1 - B2/B1^2)] / sigma,
    with nu4 defaulting to gamma4 - 3.
    """
    _check_alpha(alpha)
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1); use the s3 formula for a fixed number of factors")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if B1 <= 0 or B2 < B1 * B1 * (1.0 - _SPECTRUM_RTOL):
        raise DomainError(f"impossible spectrum: B2 = {B2} < B1^2 = {B1 * B1}")
    nu = gamma4 - 3.0 if nu4 is None else nu4
    argument = (
        2.0 * distributions.z_alpha(alpha) + (1.0 + nu) * (1.0 - 1.0 / tau) + n * (1.0 - B2 / (B1 * B1))
    ) / sigma
    return PowerResult(
        power=distributions.upper_tail(argument),
        alpha=alpha,
        scenario="divergent-s2",
        inputs={"B1": B1, "B2": B2, "n": n, "tau": tau, "nu4": nu, "sigma": sigma},
        argument=argument,
    )


def power_s3(mu: float, sigma: float, n: int, T: int, gamma4: float, alpha: float = 0.05) -> PowerResult:
    """Power when spikes grow like n^alpha: argument = [2 Z_alpha + n + g4 - 2 - T mu] / sigma."""
    _check_alpha(alpha)
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    argument = (2.0 * distributions.z_alpha(alpha) + n + gamma4 - 2.0 - T * mu) / sigma
    return PowerResult(
        power=distributions.upper_tail(argument),
        alpha=alpha,
        scenario="intermediate-s3",
        inputs={"mu": mu, "T_mu": T * mu, "sigma": sigma, "n": n, "T": T, "gamma4": gamma4},
        argument=argument,
    )


# ---------------------------------------------------------------------------
# General bounded-norm covariance
# ---------------------------------------------------------------------------

_EIGENVECTOR_CAVEAT = (
    "the limit law for non-Gaussian, non-diagonal Sigma involves a term depending on the "
    "eigenvectors of $\\Sigma_n$; only gamma4 = 3 or diagonal Sigma are supported"
)


def s1_squared(theta: Sequence[float], vartheta: Sequence[float], c: float) -> float:
    t1, t2, t3, t4 = theta
    v1, v2 = vartheta
    shift = v2 + t2
    return (
        (8.0 * t4 / c + 4.0 * t2 ** 2 + 8.0 * c * t1 ** 2 * t2 + 16.0 * t1 * t3) / v1 ** 4
        - (16.0 * t3 / c + 16.0 * t1 * t2) * shift / v1 ** 5
        + 8.0 * t2 * shift ** 2 / (c * v1 ** 6)
    )


def s2_squared(theta: Sequence[float], vartheta: Sequence[float], c: float, gamma4: float) -> float:
    t1, t2, t3, t4 = theta
    v1, v2 = vartheta
    shift = v2 + t2 + gamma4 - 3.0
    return (gamma4 - 1.0) * (
        (4.0 * t4 / c + 2.0 * t2 ** 2 + 4.0 * c * t1 ** 2 * t2 + 8.0 * t1 * t3) / v1 ** 4
        - (8.0 * t3 / c + 8.0 * t1 * t2) * shift / v1 ** 5
        + 4.0 * t2 * shift ** 2 / (c * v1 ** 6)
    )


def supp_general_covariance(
    theta: Sequence[float],
    vartheta: Sequence[float],
    c: float,
    T: int,
    gamma4: float,
    diagonal: bool,
    alpha: float = 0.05,
    gamma4_hat: Optional[float] = None,
) -> SupplementaryPower:
    """
    Limit variance, centering and power of John's test for a general bounded-norm Sigma.

    The diagonal branch applies whenever Sigma is diagonal; otherwise gamma4 must
    equal 3. The centering is T((vartheta2 + theta2 [+ g4 - 3]) / vartheta1^2 - 1).
    Both null checks (s^2 at Sigma = I under the standard and the centred
    vartheta_2) are reported alongside.

    Raises:
        UnsupportedCaseError: Sigma is neither diagonal nor paired with gamma4 = 3
    """
    _check_alpha(alpha)
    if c <= 0:
        raise DomainError("c must be positive")
    if vartheta[0] <= 0:
        raise DomainError("vartheta_1 must be positive")
    if diagonal:
        branch = "diagonal"
    elif abs(gamma4 - 3.0) <= 1e-12:
        branch = "gaussian"
    else:
        raise UnsupportedCaseError(_EIGENVECTOR_CAVEAT)

    g4_hat = gamma4 if gamma4_hat is None else gamma4_hat
    z = distributions.z_alpha(alpha)
    v1, v2 = vartheta
    t2 = theta[1]
    ones = (1.0, 1.0, 1.0, 1.0)
    if branch == "gaussian":
        s2 = s1_squared(theta, vartheta, c)
        ratio = (v2 + t2) / v1 ** 2
        numerator = 2.0 * z + 1.0 + T * (c + 1.0 - ratio)
        standard = s1_squared(ones, (1.0, 1.0 + c), c)
        centered = s1_squared(ones, (1.0, c), c)
    else:
        s2 = s2_squared(theta, vartheta, c, gamma4)
        ratio = (v2 + t2 + gamma4 - 3.0) / v1 ** 2
        numerator = 2.0 * z + g4_hat - 2.0 + T * (c + 1.0 - ratio)
        standard = s2_squared(ones, (1.0, 1.0 + c), c, gamma4)
        centered = s2_squared(ones, (1.0, c), c, gamma4)
    if not s2 > 0:
        raise DomainError(f"limit variance evaluates to {s2}")

    return SupplementaryPower(
        s2=s2,
        center=T * (ratio - 1.0),
        power=distributions.upper_tail(numerator / math.sqrt(s2)),
        branch=branch,
        identity_variance_standard=standard,
        identity_variance_centered=centered,
        notes=(
            "vartheta_2 convention is ambiguous: at Sigma = I the standard moments give "
            f"s^2 = {standard:.6g}, the centred moments give {centered:.6g} (null variance is 4)"
        ),
    )


def is_diagonal(spec: CovarianceSpec) -> bool:
    """True when Sigma is diagonal in the canonical basis."""
    if isinstance(spec, SpikedFactorCovariance):
        return spec.loadings == "canonical"
    if isinstance(spec, DenseCovariance):
        matrix = np.asarray(spec.matrix, dtype=np.float64)
        return bool(np.all(matrix == np.diag(np.diag(matrix))))
    return True


# ---------------------------------------------------------------------------
# Theory values for factor alternatives
# ---------------------------------------------------------------------------

def theory_power(
    alternative: Optional[FactorAlternative],
    n: int,
    T: int,
    gamma4: float,
    alpha: float = 0.05,
) -> PowerResult:
    """
    Asymptotic power of the residual test under a factor alternative (or the null).

    Bounded spikes with fixed r use the weak-factor formula; tau * n factors use
    the S2 formula; growing spikes (including alpha = 1) use the unbounded-norm
    formula with mu and sigma evaluated at the implied covariance.
    """
    if alternative is None:
        _check_alpha(alpha)
        return PowerResult(power=alpha, alpha=alpha, scenario="null", argument=distributions.z_alpha(alpha))

    setting = alternative.setting
    if setting == "weak-s1":
        return power_weak_lpa(alternative.spikes(n), n / T, alpha)

    spec = factor_covariance(alternative, n)
    st = sigma_traces(spec)
    moments = h1star_moments(st, gamma4, n, T)
    if setting == "divergent-s2":
        result = power_s2(st.tr1 / n, st.tr2 / n, n, alternative.tau, gamma4, moments.sigma, alpha)
    else:
        result = power_s3(moments.mu, moments.sigma, n, T, gamma4, alpha)
    inputs = dict(result.inputs, moment_regime=alternative.moment_regime, setting=setting)
    return result.model_copy(update={"inputs": inputs, "scenario": setting})


def finite_sample_power(
    alternative: Optional[FactorAlternative],
    n: int,
    T: int,
    gamma4: float,
    alpha: float = 0.05,
    gamma4_hat: Optional[float] = None,
) -> PowerResult:
    """
    Power from the unbounded-norm limit law evaluated at the exact n x n covariance.

    Unlike theory_power, no limit is taken in the spectrum: mu and sigma come
    from the finite-n traces of the implied Sigma for every setting, weak spikes
    included. At moderate n the bounded-spike formula overstates this value.
    gamma4_hat replaces gamma4 in the test's centering to reproduce a plug-in
    estimate that differs from the true fourth moment.
    """
    spec = IdentityCovariance(n=n) if alternative is None else factor_covariance(alternative, n)
    moments = h1star_moments(sigma_traces(spec), gamma4, n, T)
    centering = gamma4 if gamma4_hat is None else gamma4_hat
    result = power_s3(moments.mu, moments.sigma, n, T, centering, alpha)
    inputs = dict(result.inputs, gamma4=gamma4, gamma4_hat=centering, sigma2=moments.sigma2)
    setting = "null" if alternative is None else alternative.setting
    return result.model_copy(update={"inputs": inputs, "scenario": f"finite-n {setting}"})
