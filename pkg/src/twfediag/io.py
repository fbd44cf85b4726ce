"""CSV ingestion and report serialization.

Input is long-format UTF-8 CSV with a header row. Unit-level files carry
``group,time,outcome,treatment`` (plus an optional unit column);
cell-level files add a ``count`` column holding the number of units the
row aggregates. Column names can be remapped. Both layouts produce the
same cell table.
"""

from __future__ import annotations

import io as _io
import json

import numpy as np
import pandas as pd

from .errors import MissingColumnError
from .panel import CellTable, Observation, aggregate_cells
from .weights import WeightTable


def load_cells(
    path,
    *,
    group: str = "group",
    time: str = "time",
    outcome: str = "outcome",
    treatment: str = "treatment",
    count: str | None = None,
    unit: str | None = None,
) -> CellTable:
    """Read a long-format panel CSV into a :class:`CellTable`.

    With ``count`` given, rows are taken as pre-aggregated cells and pass
    through unchanged; otherwise each row is one unit and cells are
    aggregated here.
    """
    df = pd.read_csv(path)
    needed = [group, time, outcome, treatment]
    if count is not None:
        needed.append(count)
    if unit is not None:
        needed.append(unit)
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise MissingColumnError(
            f"missing column(s) {missing} in {path}; found {list(df.columns)}"
        )
    if count is not None:
        rows = zip(df[group], df[time], df[outcome], df[treatment], df[count])
        return CellTable.from_cell_rows(rows)
    units = df[unit] if unit is not None else df.index
    observations = [
        Observation(unit=u, group=g, time=t, outcome=y, treatment=d)
        for u, g, t, y, d in zip(units, df[group], df[time], df[outcome], df[treatment])
    ]
    return aggregate_cells(observations)


def weight_table_to_csv(table: WeightTable) -> str:
    """Weight table as ``group,time,share,weight`` CSV text."""
    df = pd.DataFrame(
        {
            "group": [e.group for e in table.entries],
            "time": [e.time for e in table.entries],
            "share": [e.share for e in table.entries],
            "weight": [e.weight for e in table.entries],
        }
    )
    buf = _io.StringIO()
    df.to_csv(buf, index=False)
    return buf.getvalue()


def to_jsonable(value):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, float) and (np.isnan(value) or np.isinf(value)):
        return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def dump_json(payload: dict) -> str:
    return json.dumps(to_jsonable(payload), indent=2, allow_nan=False)
