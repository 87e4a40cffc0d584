"""
Fixed-effects (within) estimation and residual moments.
"""

from __future__ import annotations

import dataclasses
from typing import Tuple

import numpy as np
from scipy import linalg

from panel_sphericity.core.simulation import MAX_REGRESSORS, PanelData
from panel_sphericity.core.spectra import DisturbanceMatrix, sample_traces
from panel_sphericity.errors import EstimationError, InputError
from panel_sphericity.models import SampleTracePair

MAX_CONDITION = 1e12


def demean(panel: PanelData) -> Tuple[np.ndarray, np.ndarray]:
    """Remove per-unit time means from y (n x T) and every regressor column (n x T x k)."""
    y_dm = panel.y - panel.y.mean(axis=1, keepdims=True)
    x_dm = panel.x - panel.x.mean(axis=1, keepdims=True)
    return y_dm, x_dm


@dataclasses.dataclass(frozen=True)
class WithinFit:
    """Result of the within regression; residuals are n x T."""

    beta_hat: np.ndarray
    residuals: np.ndarray
    gram: np.ndarray
    total_ss: float

    @property
    def n(self) -> int:
        return self.residuals.shape[0]

    @property
    def T(self) -> int:
        return self.residuals.shape[1]

    @property
    def k(self) -> int:
        return self.beta_hat.size

    @property
    def residual_ss(self) -> float:
        return float(np.einsum("ij,ij->", self.residuals, self.residuals))


def within_ols(panel: PanelData) -> WithinFit:
    """
    Within OLS: solve (sum x~ x~') beta = sum x~ y~ by Cholesky and form residuals.

    Raises:
        InputError: More than MAX_REGRESSORS regressors
        EstimationError: Normal equations singular or condition number above 1e12
    """
    if panel.k > MAX_REGRESSORS:
        raise InputError(f"at most {MAX_REGRESSORS} regressors are supported, got {panel.k}")
    y_dm, x_dm = demean(panel)
    flat_x = x_dm.reshape(-1, panel.k)
    flat_y = y_dm.reshape(-1)

    gram = flat_x.T @ flat_x
    rhs = flat_x.T @ flat_y
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > MAX_CONDITION:
        raise EstimationError("within normal equations are singular or ill-conditioned")
    try:
        factor = linalg.cho_factor(gram, lower=True)
    except linalg.LinAlgError as exc:
        raise EstimationError("within normal equations are not positive definite") from exc
    beta_hat = linalg.cho_solve(factor, rhs)

    residuals = y_dm - x_dm @ beta_hat
    # Exact per-unit zero time sums; the solve leaves rounding of order eps * scale.
    residuals -= residuals.mean(axis=1, keepdims=True)

    for array in (beta_hat, residuals, gram):
        array.setflags(write=False)
    return WithinFit(
        beta_hat=beta_hat,
        residuals=residuals,
        gram=gram,
        total_ss=float(np.einsum("ij,ij->", y_dm, y_dm)),
    )


def gamma4_hat(residuals: np.ndarray, standardize: bool = False) -> float:
    """
    Residual fourth moment (nT)^-1 sum nu^4.

    With standardize=True the residuals are first divided by the square root of
    their overall second moment, which makes the estimate scale-free.
    """
    values = np.asarray(residuals, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InputError("residuals contain non-finite entries")
    squares = values * values
    fourth = float(np.mean(squares * squares))
    if not standardize:
        return fourth
    second = float(np.mean(squares))
    if second == 0.0:
        return 0.0
    return fourth / (second * second)


def residual_traces(fit: WithinFit) -> SampleTracePair:
    """tr S and tr S^2 of the residual covariance S_hat = V_hat V_hat' / T."""
    return sample_traces(DisturbanceMatrix(fit.residuals))
