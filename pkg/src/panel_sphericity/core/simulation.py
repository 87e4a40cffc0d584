"""
Seedable generation of disturbances, factor panels, regressors and fixed effects.

All generators are pure functions of their configuration and (seed, stream)
key; no global random state is touched.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence, Tuple

import numpy as np

from panel_sphericity.core.spectra import DisturbanceMatrix, loading_directions, materialize
from panel_sphericity.core.streams import DISTURBANCES, REGRESSORS, stream_rng
from panel_sphericity.errors import DomainError, InputError
from panel_sphericity.models import (
    CovarianceSpec,
    DenseCovariance,
    DiagonalCovariance,
    ErrorDistribution,
    FactorAlternative,
    IdentityCovariance,
    SpikedFactorCovariance,
)

MAX_REGRESSORS = 16


def draw_standardized(dist: ErrorDistribution, rng: np.random.Generator, size: Tuple[int, ...]) -> np.ndarray:
    """I.i.d. draws with mean 0 and variance 1 from the given law."""
    if dist.kind == "gaussian":
        return rng.standard_normal(size)
    if dist.kind == "gamma":
        a = dist.shape
        return (rng.standard_gamma(a, size) - a) / np.sqrt(a)
    if dist.kind == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
    return rng.integers(0, 2, size).astype(np.float64) * 2.0 - 1.0


def apply_sqrt(spec: CovarianceSpec, z: np.ndarray) -> np.ndarray:
    """
    Multiply z (n x T) by Sigma^{1/2}.

    Identity, diagonal and spiked specs use closed forms; only dense specs take
    a symmetric eigen square root.
    """
    if isinstance(spec, IdentityCovariance):
        return np.sqrt(spec.scale) * z
    if isinstance(spec, DiagonalCovariance):
        return np.sqrt(np.asarray(spec.eigenvalues))[:, None] * z
    if isinstance(spec, SpikedFactorCovariance):
        h = np.asarray(spec.spikes, dtype=np.float64)
        boost = np.sqrt(1.0 + h) - 1.0
        q = loading_directions(spec.n, h.size, spec.loadings, spec.loading_seed)
        out = z.copy()
        if q is None:
            out[: h.size] *= (1.0 + boost)[:, None]
        else:
            out += q @ (boost[:, None] * (q.T @ z))
        return np.sqrt(spec.base) * out
    if isinstance(spec, DenseCovariance):
        eigenvalues, vectors = np.linalg.eigh(materialize(spec))
        root = (vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ vectors.T
        return root @ z
    raise InputError(f"unknown covariance spec {spec!r}")


def gen_disturbances(
    spec: CovarianceSpec,
    dist: ErrorDistribution,
    n: int,
    T: int,
    seed: int,
    stream: Sequence[int] = (),
) -> DisturbanceMatrix:
    """
    Generate V = Sigma^{1/2} Z with Z i.i.d. from dist.

    Args:
        spec: Population covariance (must have dimension n)
        dist: Law of the standardized entries
        n: Cross-section size
        T: Number of periods
        seed: Master seed
        stream: Extra stream ids, e.g. (replication,)

    Returns:
        DisturbanceMatrix of shape n x T
    """
    if n < 2 or T < 2:
        raise InputError(f"need n >= 2 and T >= 2, got {n} x {T}")
    if spec.dim != n:
        raise InputError(f"covariance has dimension {spec.dim}, not {n}")
    z = draw_standardized(dist, stream_rng(seed, *stream, DISTURBANCES), (n, T))
    return DisturbanceMatrix(apply_sqrt(spec, z))


def factor_covariance(alt: FactorAlternative, n: int) -> CovarianceSpec:
    """Population covariance sigma_eps^2 (I + sum h_j e_j e_j') implied by the alternative."""
    if alt.rank(n) >= n:
        raise DomainError(f"number of factors r = {alt.rank(n)} must be below n = {n}")
    spikes = [h for h in alt.spikes(n) if h > 0]
    if not spikes:
        return IdentityCovariance(n=n, scale=alt.sigma_eps2)
    if alt.loadings == "random" and len(spikes) != alt.rank(n):
        raise DomainError("random loadings need every spike strictly positive")
    return SpikedFactorCovariance(n=n, base=alt.sigma_eps2, spikes=spikes, loadings=alt.loadings)


def gen_factor_disturbances(
    alt: FactorAlternative,
    dist: ErrorDistribution,
    n: int,
    T: int,
    seed: int,
    stream: Sequence[int] = (),
) -> DisturbanceMatrix:
    """
    Generate nu_it = sum_j xi_ij f_tj + eps_it explicitly.

    Loadings are xi_j = ||xi_j|| e_j with ||xi_j||^2 = h_j sigma_eps^2 / sigma_j^2,
    so the population covariance is sigma_eps^2 (I + sum_j h_j e_j e_j').
    Factors and idiosyncratic errors are standardized draws from dist.
    """
    r = alt.rank(n)
    if r < 1:
        raise DomainError(f"factor rule gives r = {r} at n = {n}; at least one factor is required")
    if r >= n:
        raise DomainError(f"number of factors r = {r} must be below n = {n}")
    h = np.asarray(alt.spikes(n), dtype=np.float64)
    variances = np.asarray(alt.factor_variance(r), dtype=np.float64)

    rng = stream_rng(seed, *stream, DISTURBANCES)
    eps = np.sqrt(alt.sigma_eps2) * draw_standardized(dist, rng, (n, T))
    factors = np.sqrt(variances)[:, None] * draw_standardized(dist, rng, (r, T))
    norms = np.sqrt(h * alt.sigma_eps2 / variances)

    directions = loading_directions(n, r, alt.loadings)
    if directions is None:
        eps[:r] += norms[:, None] * factors
    else:
        eps += (directions * norms) @ factors
    return DisturbanceMatrix(eps)


@dataclasses.dataclass(frozen=True)
class PanelTruth:
    """Parameters a synthetic panel was generated from."""

    beta: np.ndarray
    mu: np.ndarray
    v: DisturbanceMatrix


@dataclasses.dataclass(frozen=True)
class PanelData:
    """Balanced panel: y is n x T, x is n x T x k."""

    y: np.ndarray
    x: np.ndarray
    truth: Optional[PanelTruth] = None

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=np.float64, copy=True)
        x = np.array(self.x, dtype=np.float64, copy=True)
        if x.ndim == 2:
            x = x[:, :, None]
        if y.ndim != 2 or x.ndim != 3 or x.shape[:2] != y.shape:
            raise InputError(f"inconsistent panel shapes y{y.shape} x{x.shape}")
        if y.shape[1] < 2:
            raise InputError("panel needs T >= 2")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise InputError("panel contains non-finite entries")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    @property
    def k(self) -> int:
        return self.x.shape[2]


def gen_panel(
    beta: Sequence[float],
    v: DisturbanceMatrix,
    regressor_seed: int,
    stream: Sequence[int] = (),
    regressors: str = "normal",
    fixed_effects: bool = True,
) -> PanelData:
    """
    Build y_it = x_it' beta + mu_i + nu_it around given disturbances.

    Regressors are i.i.d. standard normal (or standardized uniform) and drawn
    independently of V. Fixed effects are N(0,1) plus half the time-mean of
    the first regressor, so they correlate with the regressors.
    """
    beta_arr = np.asarray(beta, dtype=np.float64)
    k = beta_arr.size
    if not 1 <= k <= MAX_REGRESSORS:
        raise InputError(f"k must be between 1 and {MAX_REGRESSORS}, got {k}")
    n, T = v.n, v.T
    rng = stream_rng(regressor_seed, *stream, REGRESSORS)
    if regressors == "uniform":
        x = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), (n, T, k))
    else:
        x = rng.standard_normal((n, T, k))
    if fixed_effects:
        mu = rng.standard_normal(n) + 0.5 * x[:, :, 0].mean(axis=1)
    else:
        mu = np.zeros(n)
    y = x @ beta_arr + mu[:, None] + v.values
    return PanelData(y=y, x=x, truth=PanelTruth(beta=beta_arr, mu=mu, v=v))
