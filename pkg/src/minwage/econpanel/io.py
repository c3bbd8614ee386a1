"""CSV schemas for minimum wage panels, deflators and outcomes.

``mw_panel.csv``: ``state, year, mw_state, mw_federal, affected_share, weight``.
``affected_share`` in row ``(s, y)`` is the year ``y-1`` share of workers
earning below the year-``y`` minimum.

``deflator.csv``: ``year, index`` (any base; rescaled to the base year).

``outcomes.csv``: ``state, year, outcome`` plus optional ``weight`` and
``industry``.  ``outcome`` is already in logs.
"""

from __future__ import annotations

import pandas as pd

from ..errors import DataError

MW_COLUMNS = ["state", "year", "mw_state", "mw_federal", "affected_share", "weight"]
DEFLATOR_COLUMNS = ["year", "index"]
OUTCOME_COLUMNS = ["state", "year", "outcome"]


def _read(path, required):
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    return df


def read_mw_panel(path) -> pd.DataFrame:
    df = _read(path, MW_COLUMNS)
    df["state"] = df["state"].astype(str)
    df["year"] = df["year"].astype(int)
    return df


def read_deflator(path) -> pd.Series:
    df = _read(path, DEFLATOR_COLUMNS)
    return pd.Series(df["index"].astype(float).values, index=df["year"].astype(int).values, name="index")


def read_outcomes(path) -> pd.DataFrame:
    df = _read(path, OUTCOME_COLUMNS)
    df["state"] = df["state"].astype(str)
    df["year"] = df["year"].astype(int)
    if "industry" in df.columns:
        df["industry"] = df["industry"].astype(str)
    return df


def write_inputs(directory, panel: pd.DataFrame, deflator: pd.Series, outcomes: pd.DataFrame):
    """Write the three input files in their documented schemas."""
    from pathlib import Path
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    panel[MW_COLUMNS].to_csv(d / "mw_panel.csv", index=False, float_format="%.10g")
    pd.DataFrame({"year": deflator.index, "index": deflator.values}).to_csv(
        d / "deflator.csv", index=False, float_format="%.10g")
    outcomes.to_csv(d / "outcomes.csv", index=False, float_format="%.12g")
