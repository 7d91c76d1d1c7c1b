import os
from typing import List
from typing import Sequence
from typing import Union

import numpy as np

from perturbeu.utils.errors import ValidationError


def validate_file_path(path: str, name: str) -> str:
    if not path or not os.path.isfile(path):
        raise ValidationError(f"{name} `{path}` is not a file")

    return path


def validate_format(fmt: str) -> str:
    fmt = str(fmt).lower()
    if fmt not in ("csv", "json"):
        raise ValidationError(f"format must be 'csv' or 'json', got '{fmt}'")
    return fmt


def validate_unit_interval(value: float, name: str, closed_right: bool = False) -> float:
    value = float(value)
    upper_ok = value <= 1 if closed_right else value < 1
    if not (value > 0 and upper_ok):
        bracket = "]" if closed_right else ")"
        raise ValidationError(f"`{name}` must lie in (0, 1{bracket}, got {value}")
    return value


def validate_positive(value: Union[int, float], name: str) -> Union[int, float]:
    if not value > 0:
        raise ValidationError(f"`{name}` must be positive, got {value}")
    return value


def validate_non_negative(value: Union[int, float], name: str) -> Union[int, float]:
    if value < 0:
        raise ValidationError(f"`{name}` must be non-negative, got {value}")
    return value


def validate_belief(
    probs: Sequence[float], tolerance: float = 1e-12, renormalize: bool = False
) -> np.ndarray:
    """Validate an objective probability vector

    Parameters
    ----------
    probs : sequence of float
        Candidate probabilities, one per state

    tolerance : float
        Allowed deviation of the sum from one

    renormalize : bool
        Divide by the sum once it is within `tolerance`

    Returns
    ----------
    np.ndarray
        Validated probabilities

    """
    arr = np.asarray(probs, dtype=float)

    if arr.ndim != 1 or arr.size < 2:
        raise ValidationError("belief must list at least two state probabilities")

    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValidationError(f"belief entries must be strictly positive, got {arr.tolist()}")

    total = float(arr.sum())
    if abs(total - 1.0) > tolerance:
        raise ValidationError(f"belief sums to {total:.12g}, not 1")

    if renormalize:
        arr = arr / total

    return arr


def parse_belief_string(mu: str) -> List[float]:
    """Parse a '0.25,0.75' style command line belief"""
    try:
        return [float(v) for v in mu.split(",") if v.strip()]
    except ValueError as e:
        raise ValidationError(f"could not parse belief '{mu}'") from e
