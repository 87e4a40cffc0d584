"""
Balanced panel CSV files with header `unit,time,y,x1,...,xk`.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from panel_sphericity.core.records import FLOAT_FORMAT
from panel_sphericity.core.simulation import PanelData
from panel_sphericity.errors import PanelParseError


def _regressor_columns(columns: list) -> list:
    if columns[:3] != ["unit", "time", "y"]:
        raise PanelParseError(f"header must start with unit,time,y; got {','.join(columns[:3])}")
    regressors = columns[3:]
    expected = [f"x{j}" for j in range(1, len(regressors) + 1)]
    if not regressors or regressors != expected:
        raise PanelParseError(f"regressor columns must be x1..xk with k >= 1; got {','.join(regressors) or 'none'}")
    return regressors


def read_panel_csv(path: Union[str, Path]) -> PanelData:
    """
    Parse a balanced panel.

    Units and times are sorted; every (unit, time) pair must occur exactly once.

    Raises:
        PanelParseError: Bad header, duplicate or missing cells, non-numeric values
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise PanelParseError(f"cannot read panel {path}: {exc}") from exc
    regressors = _regressor_columns([str(c).strip() for c in frame.columns])
    frame.columns = ["unit", "time", "y"] + regressors

    keys = frame.set_index(["unit", "time"]).index
    if keys.has_duplicates:
        unit, time = keys[keys.duplicated()][0]
        raise PanelParseError(f"duplicate observation for unit={unit}, time={time}")

    units = pd.Index(frame["unit"].unique()).sort_values()
    times = pd.Index(frame["time"].unique()).sort_values()
    grid = pd.MultiIndex.from_product([units, times], names=["unit", "time"])
    missing = grid[~grid.isin(keys)]
    if len(missing):
        unit, time = missing[0]
        raise PanelParseError(f"unbalanced panel: missing unit={unit}, time={time}")

    try:
        values = frame.set_index(["unit", "time"]).reindex(grid).to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise PanelParseError(f"non-numeric panel values: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise PanelParseError("panel contains missing or non-finite values")

    cube = values.reshape(len(units), len(times), 1 + len(regressors))
    return PanelData(y=cube[:, :, 0], x=cube[:, :, 1:])


def write_panel_csv(panel: PanelData, path: Union[str, Path]) -> Path:
    """Write panel in long format; units and times are numbered from 1."""
    n, T, k = panel.n, panel.T, panel.k
    unit, time = np.meshgrid(np.arange(1, n + 1), np.arange(1, T + 1), indexing="ij")
    frame = pd.DataFrame({"unit": unit.ravel(), "time": time.ravel(), "y": panel.y.ravel()})
    for j in range(k):
        frame[f"x{j + 1}"] = panel.x[:, :, j].ravel()
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return target
