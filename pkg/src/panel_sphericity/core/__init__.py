"""
Core modules: trace kernels, data generation, estimation, tests, power and experiments.
"""

from .spectra import DisturbanceMatrix, sample_traces, sigma_traces, eta_limits, theta_moments, mp_moments
from .simulation import PanelData, gen_disturbances, gen_factor_disturbances, gen_panel
from .within import WithinFit, demean, within_ols, gamma4_hat
from .sphericity import john_u, classic_john_test, raw_panel_test, grj_test, rj_test
from .power import (
    power_weak_lpa,
    power_weak_ulpa,
    h1star_moments,
    power_s2,
    power_s3,
    supp_general_covariance,
)
from .harness import run_experiment, gap_check, distribution_diagnostics

__all__ = [
    "DisturbanceMatrix",
    "sample_traces",
    "sigma_traces",
    "eta_limits",
    "theta_moments",
    "mp_moments",
    "PanelData",
    "gen_disturbances",
    "gen_factor_disturbances",
    "gen_panel",
    "WithinFit",
    "demean",
    "within_ols",
    "gamma4_hat",
    "john_u",
    "classic_john_test",
    "raw_panel_test",
    "grj_test",
    "rj_test",
    "power_weak_lpa",
    "power_weak_ulpa",
    "h1star_moments",
    "power_s2",
    "power_s3",
    "supp_general_covariance",
    "run_experiment",
    "gap_check",
    "distribution_diagnostics",
]
