"""
Persistence of per-replication records and experiment summaries.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import TYPE_CHECKING, Sequence, Union

import pandas as pd

from panel_sphericity.core.console import get_logger
from panel_sphericity.models import McSummary

if TYPE_CHECKING:
    from panel_sphericity.core.harness import RepRecord

logger = get_logger(__name__)

REP_COLUMNS = ["rep", "U", "U_hat", "gamma4_hat", "J", "p_value", "gap"]

# 17 significant digits round-trip every float64 exactly.
FLOAT_FORMAT = "%.17g"


def rep_frame(reps: Sequence["RepRecord"]) -> pd.DataFrame:
    rows = [dataclasses.asdict(record) for record in reps]
    return pd.DataFrame(rows, columns=REP_COLUMNS + ["failure"])[REP_COLUMNS]


def write_rep_csv(reps: Sequence["RepRecord"], path: Union[str, Path]) -> Path:
    """
    Write one row per replication with header `rep,U,U_hat,gamma4_hat,J,p_value,gap`.

    Failed replications appear with empty (NaN) statistics.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    rep_frame(reps).to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return target


def format_summary(summary: McSummary) -> str:
    return "\n".join(summary.as_lines())


def save_summary(summary: McSummary, path: Union[str, Path]) -> Path:
    """Write the summary as key=value lines."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_summary(summary) + "\n", encoding="utf-8")
    logger.info(f"[Records] Summary saved: {target}")
    return target
