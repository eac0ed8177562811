"""CSV ingestion of univariate time series."""
from __future__ import annotations

import math

import numpy as np
import pandas as pd

from .exceptions import EmptySeries, ParseError
from .types import TimeSeries

TRANSFORMS = ("none", "growth", "pct_annualized_growth")
DATE_HEADERS = {"date", "observation_date", "time", "period", "year", "quarter", "month", "t"}


def _to_float(text):
    try:
        v = float(str(text).strip())
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, value_column=None, transform: str = "none",
             start=None, end=None) -> TimeSeries:
    """Read one numeric column of a headed CSV file.

    A first column that is non-numeric or carries a date-like header (``date``,
    ``year``, ...) is taken as time labels. With
    ``transform="growth"`` (alias ``"pct_annualized_growth"``) levels become
    annualized quarterly growth rates ``400 * ln(x_t / x_{t-1})`` and the first
    observation is dropped. ``start``/``end`` filter rows by label (inclusive,
    string comparison) before the transform.
    """
    if transform not in TRANSFORMS:
        raise ValueError(f"transform must be one of {TRANSFORMS}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise EmptySeries(f"{path} has no data") from exc
    if df.shape[0] == 0:
        raise EmptySeries(f"{path} has no data rows")
    cols = list(df.columns)
    first_numeric = all(_to_float(v) is not None for v in df[cols[0]] if str(v).strip())
    date_header = str(cols[0]).strip().lower() in DATE_HEADERS
    label_col = cols[0] if len(cols) > 1 and (date_header or not first_numeric) else None

    if value_column is None:
        candidates = [c for c in cols if c != label_col]
        if len(candidates) != 1:
            raise ParseError(f"{path}: choose a value column among {candidates}")
        value_column = candidates[0]
    elif value_column not in cols:
        raise ParseError(f"{path}: no column named {value_column!r} (have {cols})")

    values = []
    for i, text in enumerate(df[value_column]):
        v = _to_float(text)
        if v is None:
            # header is line 1, so data row i sits on line i + 2
            raise ParseError(f"{path}: row {i + 2}, column {value_column!r}: "
                             f"cannot parse {text!r} as a number")
        values.append(v)
    values = np.array(values)
    labels = list(df[label_col].astype(str)) if label_col else None

    if labels is not None and (start is not None or end is not None):
        keep = np.array([(start is None or lab >= start) and (end is None or lab <= end)
                         for lab in labels])
        values = values[keep]
        labels = [lab for lab, kk in zip(labels, keep) if kk]
    if values.size == 0:
        raise EmptySeries(f"{path}: no observations selected")

    if transform != "none":
        if np.any(values <= 0):
            raise ParseError(f"{path}: growth transform needs positive levels")
        values = 400.0 * np.diff(np.log(values))
        labels = labels[1:] if labels is not None else None
        if values.size == 0:
            raise EmptySeries(f"{path}: growth transform needs at least two levels")
    return TimeSeries(values, labels)
