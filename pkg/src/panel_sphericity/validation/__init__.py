"""
Acceptance suite: named criteria and the runner that executes them.
"""

from .runner import CriterionResult, ValidationRun, corrupted_normal_cdf, run_validation

__all__ = ["CriterionResult", "ValidationRun", "corrupted_normal_cdf", "run_validation"]
