"""
Runs the acceptance criteria and collects per-criterion results.

- Records the measured values of every criterion, passing or not
- A criterion that raises counts as failed, with the exception as its reason
- Optional fail-fast stops at the first failure
"""

from __future__ import annotations

import contextlib
import dataclasses
import time
from typing import Dict, Iterator, List, Optional, Sequence

from scipy import special

from panel_sphericity.core import distributions
from panel_sphericity.core.console import get_logger
from panel_sphericity.validation.criteria import ValidationContext, load_criteria

logger = get_logger(__name__)


@dataclasses.dataclass
class CriterionResult:
    """Outcome of one criterion."""

    name: str
    passed: bool
    measured: Dict[str, float]
    detail: str = ""
    seconds: float = 0.0

    def as_line(self) -> str:
        values = " ".join(f"{key}={value:.6g}" for key, value in self.measured.items())
        status = "PASS" if self.passed else "FAIL"
        tail = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name} {values}{tail}".rstrip()


@dataclasses.dataclass
class ValidationRun:
    """All criterion results of one suite execution."""

    results: List[CriterionResult]

    @property
    def success(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failed(self) -> List[str]:
        return [result.name for result in self.results if not result.passed]


def _corrupted_normal_cdf(x: float) -> float:
    # Wrong scale inside erfc: a plausible-looking but incorrect CDF.
    return 0.5 * float(special.erfc(-x / 2.0))


@contextlib.contextmanager
def corrupted_normal_cdf() -> Iterator[None]:
    """Temporarily replace distributions.normal_cdf with a faulty version."""
    original = distributions.normal_cdf
    distributions.normal_cdf = _corrupted_normal_cdf
    try:
        yield
    finally:
        distributions.normal_cdf = original


def run_validation(
    scale: float = 1.0,
    threads: int = 1,
    corrupt: bool = False,
    fail_fast: bool = False,
    seed: int = 0,
    only: Optional[Sequence[str]] = None,
) -> ValidationRun:
    """
    Execute the acceptance criteria.

    Args:
        scale: Multiplier on replication counts (tolerances widen accordingly)
        threads: Worker threads for Monte-Carlo criteria
        corrupt: Run with a faulty normal CDF as a negative control
        fail_fast: Stop at the first failing criterion
        seed: Master seed shared by all criteria
        only: Restrict the run to these criterion names

    Returns:
        ValidationRun with one result per executed criterion
    """
    ctx = ValidationContext(seed=seed, scale=scale, threads=threads)
    criteria = load_criteria()
    if only:
        criteria = [criterion for criterion in criteria if criterion.name in set(only)]

    results: List[CriterionResult] = []
    guard = corrupted_normal_cdf() if corrupt else contextlib.nullcontext()
    with guard:
        for criterion in criteria:
            logger.info(f"[Validate] {criterion.name}: {criterion.description}")
            started = time.perf_counter()
            try:
                outcome = criterion.check(ctx)
                result = CriterionResult(
                    name=criterion.name,
                    passed=bool(outcome.passed),
                    measured=outcome.measured,
                    detail=outcome.detail,
                )
            except Exception as exc:
                result = CriterionResult(
                    name=criterion.name, passed=False, measured={}, detail=f"raised {exc!r}"
                )
            result.seconds = time.perf_counter() - started
            results.append(result)
            if not result.passed:
                logger.warning(f"[Validate] {criterion.name} failed")
                if fail_fast:
                    break
    return ValidationRun(results=results)
