from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import replace
import logging
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

from perturbeu.measures.Behavior.BehavioralMetrics import ALMOST_DIAGONAL_RADII
from perturbeu.utils.errors import ValidationError
from perturbeu.utils.validators import parse_belief_string
from perturbeu.utils.validators import validate_belief
from perturbeu.utils.validators import validate_file_path
from perturbeu.utils.validators import validate_format
from perturbeu.utils.validators import validate_non_negative
from perturbeu.utils.validators import validate_positive
from perturbeu.utils.validators import validate_unit_interval


def _split(value: str) -> List[str]:
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"cannot read '{value}' as a boolean")


def _as_ints(value: Any) -> Tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in _split(value))


def _as_floats(value: Any) -> Tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in _split(value))


def _as_paths(value: Any) -> List[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return _split(value)


def _as_belief(value: Any) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return parse_belief_string(value)


def _optional(convert: Callable) -> Callable:
    def inner(value: Any):
        if value is None or str(value).strip().lower() in ("", "none", "na"):
            return None
        return convert(value)

    return inner


_CONVERTERS: Dict[str, Callable] = {
    "inputs": _as_paths,
    "fmt": _optional(str),
    "mu": _optional(_as_belief),
    "tie_tolerance": float,
    "ccei_tol": float,
    "max_len": _optional(int),
    "seu": _as_bool,
    "drops": _as_ints,
    "mptest": _as_bool,
    "radii": _as_floats,
    "eta1": float,
    "eta2": float,
    "alpha": float,
    "draws": int,
    "seed": int,
    "workers": int,
    "output": _optional(str),
    "json_output": _optional(str),
    "scatter": _optional(str),
    "kind": str,
    "subjects": int,
    "trials": int,
    "states": int,
    "gamma": _optional(float),
    "xi2": float,
    "ratio_bound": float,
    "budgets_from": _optional(str),
    "compare": _optional(str),
    "oracle_tol": float,
    "oracle_trials": int,
}

# flag spellings that differ from the field name
_ALIASES: Dict[str, str] = {
    "format": "fmt",
    "json": "json_output",
    "drop": "drops",
}


@dataclass(frozen=True)
class RunConfig:
    """
    Every option of a command line run

    Attributes
    ----------
    `inputs` : list of str
        Input data files

    `fmt` : str, optional
        'csv' or 'json', inferred from the extension when None

    `mu` : list of float, optional
        Objective belief overriding the input's

    `drops` : tuple of int
        Drop-m variants to compute, empty to skip

    `mptest` : bool
        Run the minimum perturbation test per subject

    Methods
    -------
    `from_sources()`
        Merge a key=value file, explicit options and defaults

    `validate()`
        Check every field

    """

    inputs: List[str] = field(default_factory=list)
    fmt: Optional[str] = None
    mu: Optional[List[float]] = None
    tie_tolerance: float = 0.0
    ccei_tol: float = 1e-6
    max_len: Optional[int] = None
    seu: bool = True
    drops: Tuple[int, ...] = ()
    mptest: bool = False
    radii: Tuple[float, ...] = ALMOST_DIAGONAL_RADII
    eta1: float = 0.35
    eta2: float = 0.35
    alpha: float = 0.05
    draws: int = 200_000
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None
    json_output: Optional[str] = None
    scatter: Optional[str] = None
    kind: str = "bronars"
    subjects: int = 100
    trials: int = 25
    states: int = 2
    gamma: Optional[float] = None
    xi2: float = 0.0
    ratio_bound: float = 5.0
    budgets_from: Optional[str] = None
    compare: Optional[str] = None
    oracle_tol: float = 1e-6
    oracle_trials: int = 3

    def __post_init__(self):
        if self.mu is not None:
            mu = validate_belief(self.mu, tolerance=1e-9, renormalize=True)
            object.__setattr__(self, "mu", mu.tolist())
        self.validate()

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_sources(cls, config_file: Optional[str] = None, **options) -> "RunConfig":
        """File values first, then options that are not None"""
        values: Dict[str, Any] = {}
        if config_file:
            values.update(read_config_file(config_file))

        for key, value in options.items():
            if value is None:
                continue
            name = _field_name(key)
            values[name] = _CONVERTERS[name](value)

        return cls(**values)

    def with_options(self, **options) -> "RunConfig":
        return replace(self, **{k: v for k, v in options.items() if v is not None})

    def validate(self) -> None:
        if self.fmt is not None:
            validate_format(self.fmt)
        for path in self.inputs:
            validate_file_path(path, "input")
        if self.budgets_from:
            validate_file_path(self.budgets_from, "budget file")
        if self.compare:
            validate_file_path(self.compare, "comparison file")
        if self.mu is not None:
            validate_belief(self.mu, tolerance=1e-9)

        validate_non_negative(self.tie_tolerance, "tie_tolerance")
        validate_positive(self.ccei_tol, "ccei_tol")
        validate_positive(self.oracle_tol, "oracle_tol")
        validate_positive(self.oracle_trials, "oracle_trials")
        if self.max_len is not None:
            validate_positive(self.max_len, "max_len")
        for m in self.drops:
            validate_positive(m, "drop")
        for r in self.radii:
            validate_positive(r, "radius")

        validate_unit_interval(self.eta1, "eta1")
        validate_unit_interval(self.eta2, "eta2")
        validate_unit_interval(self.alpha, "alpha")
        if self.draws < 10_000:
            raise ValidationError(f"`draws` must be at least 10000, got {self.draws}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"`seed` must be a 64-bit unsigned integer, got {self.seed}")
        validate_positive(self.workers, "workers")

        if self.kind not in ("bronars", "crra", "perturbed"):
            raise ValidationError(f"kind must be bronars, crra or perturbed, got '{self.kind}'")
        validate_positive(self.subjects, "subjects")
        validate_positive(self.trials, "trials")
        if self.states < 2:
            raise ValidationError(f"`states` must be at least 2, got {self.states}")
        if self.gamma is not None:
            validate_positive(self.gamma, "gamma")
        validate_non_negative(self.xi2, "xi2")
        if self.ratio_bound < 1:
            raise ValidationError(f"`ratio_bound` must be at least 1, got {self.ratio_bound}")


def _field_name(key: str) -> str:
    name = key.strip().lstrip("-").replace("-", "_").lower()
    name = _ALIASES.get(name, name)
    if name not in _CONVERTERS:
        raise ValidationError(f"unknown option '{key}'")
    return name


def parse_config_text(text: str) -> Dict[str, Any]:
    """Flat key=value lines, '#' comments and blank lines ignored"""
    values: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {number}: expected key=value, got '{line}'")

        key, value = (part.strip() for part in line.split("=", 1))
        name = _field_name(key)
        try:
            values[name] = _CONVERTERS[name](value)
        except ValueError as e:
            raise ValidationError(f"config line {number}: {e}") from e

    return values


def read_config_file(path: str) -> Dict[str, Any]:
    validate_file_path(path, "config")
    with open(path, encoding="utf-8") as f:
        values = parse_config_text(f.read())

    logging.info(f"{len(values)} option(s) read from {path}")
    return values
