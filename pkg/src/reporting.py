"""Fixed-format rendering of results: text reports and CSV tables."""

import math
from typing import Any, Iterable, List, Mapping, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

SIGNIFICANT_DIGITS = 12


def format_float(value: float) -> str:
    """
    Format a float with 12 significant digits.

    Example:
        >>> format_float(1 / 3)
        '0.333333333333'
        >>> format_float(2.5e-5)
        '2.50000000000e-05'
        >>> format_float(0.0)
        '0'
    """
    value = float(value)
    if value == 0:
        return "0"
    if not math.isfinite(value):
        return str(value)
    if abs(value) < 1e-4 or abs(value) >= 1e6:
        return f"{value:.{SIGNIFICANT_DIGITS - 1}e}"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def format_value(value: Any) -> str:
    if value is None:
        return "N/A"
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def _csv_cell(value: Any) -> str:
    if value is None or value is pd.NA or (isinstance(value, (float, np.floating)) and np.isnan(value)):
        return ""
    return format_value(value)


def format_frame(frame: pd.DataFrame) -> str:
    """CSV text with a header row; cells use format_value, missing values are empty."""
    out = frame.copy()
    for column in out.columns:
        series = out[column]
        if pd.api.types.is_float_dtype(series) or pd.api.types.is_bool_dtype(series) or series.dtype == object:
            out[column] = series.map(_csv_cell)
    return out.to_csv(index=False, lineterminator="\n")


def _flatten(data: Mapping[str, Any], prefix: str = "") -> Iterable[Tuple[str, Any]]:
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            yield from _flatten(value, f"{name}.")
        elif isinstance(value, list) and value and isinstance(value[0], Mapping):
            for i, item in enumerate(value, start=1):
                yield from _flatten(item, f"{name}[{i}].")
        else:
            yield name, value


def render_report(title: str, result: Union[BaseModel, Mapping[str, Any]], skip: Iterable[str] = ()) -> str:
    data = result.model_dump() if isinstance(result, BaseModel) else dict(result)
    skipped = set(skip)
    lines: List[str] = [title, "=" * len(title)]
    for name, value in _flatten(data):
        if name.split(".")[-1] in skipped:
            continue
        lines.append(f"{name}: {format_value(value)}")
    return "\n".join(lines) + "\n"
