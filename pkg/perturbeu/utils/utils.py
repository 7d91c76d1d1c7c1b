import math
from typing import Any
from typing import Dict
from typing import Optional
from typing import Union

import numpy as np

NA: str = "NA"


def format_value(value: Any, decimals: int = 6) -> str:
    """Format a report value

    Floats are printed with a fixed number of decimals,
    missing or non-finite values as `NA`.

    Examples
    ----------
    >>> format_value(0.1234567)
    '0.123457'
    >>> format_value(None)
    'NA'
    """
    if value is None:
        return NA

    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))

    if isinstance(value, (int, np.integer)):
        return str(int(value))

    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return NA
        return f"{float(value):.{decimals}f}"

    return str(value)


def finite_or_none(value: Optional[Union[float, np.floating]]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def jsonable(obj: Any) -> Any:
    """Convert numpy containers into plain JSON types"""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return finite_or_none(obj)
    return obj


def radius_key(radius: float) -> str:
    """Column name for an almost-diagonal radius"""
    return f"almost_diagonal_r{radius:g}"


def merge_dicts(*dicts: Optional[Dict]) -> Dict:
    merged: dict = {}
    for d in dicts:
        if d:
            merged.update(d)
    return merged
