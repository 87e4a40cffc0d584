"""
Trace functionals of sample and population covariance matrices.

John's statistic needs only tr S_T and tr S_T^2, and every power formula needs
only traces of powers and Hadamard products of Sigma, so no eigendecomposition
of S_T is ever taken.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Literal, Optional, Tuple

import numpy as np

from panel_sphericity.core.streams import LOADINGS, stream_rng
from panel_sphericity.errors import DomainError, InputError
from panel_sphericity.models import (
    CovarianceSpec,
    DenseCovariance,
    DiagonalCovariance,
    IdentityCovariance,
    MomentSet,
    SampleTracePair,
    SigmaTraces,
    SpikedFactorCovariance,
)

TracePath = Literal["auto", "dense", "gram"]


@dataclasses.dataclass(frozen=True)
class DisturbanceMatrix:
    """The n x T panel of disturbances (or residuals); column t is nu_t."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise InputError(f"disturbance matrix must be 2-D, got shape {values.shape}")
        n, T = values.shape
        if n < 2 or T < 2:
            raise InputError(f"disturbance matrix needs n >= 2 and T >= 2, got {n} x {T}")
        if not np.all(np.isfinite(values)):
            raise InputError("disturbance matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]


def _fsum_rows(matrix: np.ndarray) -> float:
    # Row partial sums of squares, combined with an exactly rounded sum.
    return math.fsum(np.einsum("ij,ij->i", matrix, matrix).tolist())


def sample_traces(v: DisturbanceMatrix, path: TracePath = "auto") -> SampleTracePair:
    """
    Compute tr S_T and tr S_T^2 for S_T = V V' / T.

    The n x n path forms S_T; the Gram path forms the T x T matrix V'V, whose
    squared Frobenius norm equals T^2 tr S_T^2. `auto` picks Gram when n > T.

    Args:
        v: Disturbance or residual panel
        path: "auto", "dense" or "gram"

    Returns:
        SampleTracePair with tr_s and tr_s2
    """
    values = v.values
    n, T = v.n, v.T
    use_gram = path == "gram" or (path == "auto" and n > T)

    tr_s = _fsum_rows(values) / T
    if use_gram:
        gram = values.T @ values
        tr_s2 = _fsum_rows(gram) / (T * T)
    else:
        s = (values @ values.T) / T
        tr_s2 = _fsum_rows(s)
    return SampleTracePair(tr_s=tr_s, tr_s2=tr_s2, n=n, T=T)


# ---------------------------------------------------------------------------
# Population covariance
# ---------------------------------------------------------------------------

def loading_directions(n: int, r: int, policy: str = "canonical", seed: int = 0) -> Optional[np.ndarray]:
    """
    Orthonormal loading directions e_1..e_r as an n x r matrix.

    Returns None for the canonical policy (the first r basis vectors), which
    callers treat in closed form.
    """
    if policy == "canonical":
        return None
    gaussian = stream_rng(seed, LOADINGS).standard_normal((n, r))
    q, upper = np.linalg.qr(gaussian)
    # Fix column signs so the directions are a deterministic function of the seed.
    return q * np.sign(np.diag(upper))


def with_dimension(spec: CovarianceSpec, n: Optional[int]) -> CovarianceSpec:
    """Resize a dimension-free family (identity, spiked) to n; explicit matrices must already match."""
    if n is None or n == spec.dim:
        return spec
    if isinstance(spec, (IdentityCovariance, SpikedFactorCovariance)):
        return spec.model_copy(update={"n": n})
    raise InputError(f"{spec.kind} covariance has dimension {spec.dim}, not {n}")


def _dense_matrix(spec: DenseCovariance) -> np.ndarray:
    matrix = np.asarray(spec.matrix, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(matrix))))
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError("dense covariance is not symmetric")
    if np.any(np.diag(matrix) <= 0):
        raise DomainError("dense covariance must have a strictly positive diagonal")
    if np.linalg.eigvalsh(matrix)[0] < -1e-10 * scale:
        raise DomainError("dense covariance is not positive semi-definite")
    return matrix


def materialize(spec: CovarianceSpec) -> np.ndarray:
    """Dense n x n Sigma; used as an oracle and for the Dense square root."""
    if isinstance(spec, IdentityCovariance):
        return spec.scale * np.eye(spec.n)
    if isinstance(spec, DiagonalCovariance):
        return np.diag(np.asarray(spec.eigenvalues, dtype=np.float64))
    if isinstance(spec, DenseCovariance):
        return _dense_matrix(spec)
    h = np.asarray(spec.spikes, dtype=np.float64)
    q = loading_directions(spec.n, h.size, spec.loadings, spec.loading_seed)
    sigma = np.eye(spec.n)
    if q is None:
        sigma[np.arange(h.size), np.arange(h.size)] += h
    else:
        sigma += (q * h) @ q.T
    return spec.base * sigma


def _from_diagonal(values: np.ndarray) -> SigmaTraces:
    powers = [math.fsum((values ** k).tolist()) for k in (1, 2, 3, 4)]
    return SigmaTraces(
        tr1=powers[0], tr2=powers[1], tr3=powers[2], tr4=powers[3],
        had11=powers[1], had12=powers[2], had22=powers[3], n=values.size,
    )


def _spiked_traces(spec: SpikedFactorCovariance) -> SigmaTraces:
    n, b = spec.n, spec.base
    h = np.asarray(spec.spikes, dtype=np.float64)
    r = h.size
    trs = [(n - r) * b ** k + b ** k * math.fsum(((1.0 + h) ** k).tolist()) for k in (1, 2, 3, 4)]
    q = loading_directions(n, r, spec.loadings, spec.loading_seed)
    if q is None:
        had11, had12, had22 = trs[1], trs[2], trs[3]
    else:
        q2 = q * q
        d1 = b * (1.0 + q2 @ h)
        d2 = b * b * (1.0 + q2 @ ((1.0 + h) ** 2 - 1.0))
        had11 = math.fsum((d1 * d1).tolist())
        had12 = math.fsum((d1 * d2).tolist())
        had22 = math.fsum((d2 * d2).tolist())
    return SigmaTraces(tr1=trs[0], tr2=trs[1], tr3=trs[2], tr4=trs[3],
                       had11=had11, had12=had12, had22=had22, n=n)


def sigma_traces(spec: CovarianceSpec) -> SigmaTraces:
    """
    Exact trace functionals tr Sigma^k (k = 1..4) and the Hadamard traces.

    Identity, diagonal and spiked specs are evaluated in closed form; the spiked
    case never materializes Sigma.
    """
    if isinstance(spec, IdentityCovariance):
        return _from_diagonal(np.full(spec.n, spec.scale))
    if isinstance(spec, DiagonalCovariance):
        return _from_diagonal(np.asarray(spec.eigenvalues, dtype=np.float64))
    if isinstance(spec, SpikedFactorCovariance):
        return _spiked_traces(spec)

    sigma = _dense_matrix(spec)
    sigma2 = sigma @ sigma
    diag1, diag2 = np.diag(sigma), np.diag(sigma2)
    return SigmaTraces(
        tr1=float(np.trace(sigma)),
        tr2=float(np.sum(sigma * sigma)),
        tr3=float(np.sum(sigma2 * sigma)),
        tr4=float(np.sum(sigma2 * sigma2)),
        had11=float(np.dot(diag1, diag1)),
        had12=float(np.dot(diag1, diag2)),
        had22=float(np.dot(diag2, diag2)),
        n=sigma.shape[0],
    )


def eta_limits(spec: CovarianceSpec, n: Optional[int] = None) -> Tuple[float, float, float]:
    """Finite-n values of eta_1 = tr(Sigma)/n, eta_2 = tr(Sigma^2)/n, eta_3 = mean of Sigma_ii^2."""
    st = sigma_traces(with_dimension(spec, n))
    return st.tr1 / st.n, st.tr2 / st.n, st.had11 / st.n


def theta_moments(spec: CovarianceSpec, n: Optional[int] = None) -> Tuple[float, float, float, float]:
    """Moments theta_i = tr(Sigma^i)/n of the population spectral distribution."""
    st = sigma_traces(with_dimension(spec, n))
    return st.tr1 / st.n, st.tr2 / st.n, st.tr3 / st.n, st.tr4 / st.n


def mp_moments(
    theta: Tuple[float, ...],
    c: float,
    centered: bool = False,
) -> Tuple[float, float]:
    """
    First two moments of the generalized Marchenko-Pastur law F^{c,H}.

    Standard identities: vartheta_1 = theta_1, vartheta_2 = theta_2 + c theta_1^2.
    With centered=True the population part theta_2 is removed from vartheta_2,
    giving (theta_1, c theta_1^2).
    """
    if c <= 0:
        raise DomainError("aspect ratio c must be positive")
    if theta[0] <= 0:
        raise DomainError("theta_1 must be positive")
    excess = c * theta[0] ** 2
    return float(theta[0]), float(excess if centered else theta[1] + excess)


def moment_set(spec: CovarianceSpec, T: int, n: Optional[int] = None, centered: bool = False) -> MomentSet:
    spec = with_dimension(spec, n)
    theta = theta_moments(spec)
    c = spec.dim / T
    return MomentSet(theta=theta, eta=eta_limits(spec), vartheta=mp_moments(theta, c, centered), c=c)
