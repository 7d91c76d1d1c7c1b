from dataclasses import dataclass
from dataclasses import field
import logging
import math
from typing import Dict
from typing import Iterable
from typing import Optional
from typing import Tuple
import warnings

import numpy as np
import pandas as pd
from scipy import stats

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import risk_neutral_prices
from perturbeu.measures.Perturbation.PerturbationSolver import PerturbationSolution
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_oeu
from perturbeu.measures.Perturbation.PerturbationSolver import recover_perturbed_dataset
from perturbeu.utils.errors import UnsupportedConfigurationError
from perturbeu.utils.utils import radius_key
from perturbeu.utils.validators import validate_positive

ALMOST_DIAGONAL_RADII: Tuple[float, ...] = (0.05, 0.2, 0.5, 1.0)

# corner choices are replaced by this share of income before taking logs
CORNER_SHARE: float = 0.001


@dataclass
class MetricsRow:
    """
    Behavioural diagnostics of one subject

    Two-state fields are None when the dataset has more states
    (FOSD also needs a uniform belief).

    """

    fosd_count: Optional[int]
    fosd_fraction: Optional[float]
    dsd_rho: Optional[float]
    almost_diagonal: Dict[float, Optional[bool]] = field(default_factory=dict)
    e_upper_bound: float = 0.0
    e_upper_bound_cross: float = 0.0

    def to_dict(self) -> dict:
        row = {
            "fosd_count": self.fosd_count,
            "fosd_fraction": self.fosd_fraction,
            "dsd_rho": self.dsd_rho,
            "e_upper_bound": self.e_upper_bound,
            "e_upper_bound_cross": self.e_upper_bound_cross,
        }
        for r, flag in self.almost_diagonal.items():
            row[radius_key(r)] = flag
        return row


def _require_two_states(d: Dataset, what: str) -> None:
    if d.S != 2:
        raise UnsupportedConfigurationError(
            f"{what} needs two states, subject {d.subject_id} has {d.S}"
        )


def fosd_violations(d: Dataset) -> Tuple[int, float]:
    """Choices spending more on the more expensive state

    An observation violates FOSD-monotonicity if p1 > p2 and
    x1 > x2, or p2 > p1 and x2 > x1.

    Returns
    ----------
    (int, float)
        Violation count and count / K

    Raises
    ----------
    UnsupportedConfigurationError
        unless S = 2 with a uniform belief

    """
    _require_two_states(d, "FOSD check")
    if not d.belief.is_uniform:
        raise UnsupportedConfigurationError(
            f"FOSD check needs a uniform belief, subject {d.subject_id} has {d.mu.tolist()}"
        )

    p, x = d.prices, d.quantities
    violated = ((p[:, 0] > p[:, 1]) & (x[:, 0] > x[:, 1])) | (
        (p[:, 1] > p[:, 0]) & (x[:, 1] > x[:, 0])
    )
    count = int(violated.sum())
    return count, count / d.K


def corner_adjusted(d: Dataset) -> np.ndarray:
    """Quantities with zero entries replaced by 0.1% of income"""
    x = d.quantities
    floor = CORNER_SHARE * d.incomes[:, None]
    return np.where(x == 0, np.broadcast_to(floor, x.shape), x)


def log_ratios(d: Dataset) -> Tuple[np.ndarray, np.ndarray]:
    """log(p2 / p1) and corner adjusted log(x2 / x1) per observation"""
    _require_two_states(d, "log ratio series")
    x = corner_adjusted(d)
    log_p = np.log(d.prices[:, 1]) - np.log(d.prices[:, 0])
    log_x = np.log(x[:, 1]) - np.log(x[:, 0])
    return log_p, log_x


def dsd_correlation(d: Dataset) -> Optional[float]:
    """Spearman correlation of log(x2/x1) against log(p2/p1)

    Returns
    ----------
    float or None
        None when either series is constant

    """
    log_p, log_x = log_ratios(d)

    if np.ptp(log_p) == 0 or np.ptp(log_x) == 0:
        warnings.warn(
            f"constant series for subject {d.subject_id}, rank correlation undefined",
            UserWarning,
            stacklevel=2,
        )
        return None

    rho = stats.spearmanr(log_x, log_p).correlation
    if not math.isfinite(rho):
        return None
    return float(np.clip(rho, -1.0, 1.0))


def almost_diagonal(d: Dataset, r: float) -> bool:
    """Every choice within `r` of the riskless bundle on its budget line"""
    _require_two_states(d, "almost diagonal check")
    validate_positive(r, "r")

    centre = d.incomes / d.prices.sum(axis=1)
    dist = np.hypot(d.quantities[:, 0] - centre, d.quantities[:, 1] - centre)
    return bool(np.all(dist <= r))


def e_upper_bound(d: Dataset) -> float:
    """Largest within-observation risk neutral price ratio minus one"""
    log_rho = risk_neutral_prices(d).log_rho
    return math.expm1(float(np.max(log_rho.max(axis=1) - log_rho.min(axis=1))))


def e_upper_bound_cross(d: Dataset) -> float:
    """Largest risk neutral price ratio across all observations minus one"""
    log_rho = risk_neutral_prices(d).log_rho
    return math.expm1(float(log_rho.max() - log_rho.min()))


def scatter_series(d: Dataset, solution: Optional[PerturbationSolution] = None) -> pd.DataFrame:
    """Plot-ready price and quantity ratios

    Columns: subject, trial (1-based), log_price_ratio,
    log_quantity_ratio and log_perturbed_price_ratio, the last
    taken from the perturbed prices of the objective solution.

    """
    log_p, log_x = log_ratios(d)
    if solution is None:
        solution = min_e_oeu(d)
    q = recover_perturbed_dataset(d, solution).prices

    return pd.DataFrame(
        {
            "subject": d.subject_id,
            "trial": np.arange(1, d.K + 1),
            "log_price_ratio": log_p,
            "log_quantity_ratio": log_x,
            "log_perturbed_price_ratio": np.log(q[:, 1]) - np.log(q[:, 0]),
        }
    )


def metrics_row(d: Dataset, radii: Iterable[float] = ALMOST_DIAGONAL_RADII) -> MetricsRow:
    """All behavioural diagnostics of `d` that apply to its shape"""
    fosd_count: Optional[int] = None
    fosd_fraction: Optional[float] = None
    dsd_rho: Optional[float] = None
    diagonal: Dict[float, Optional[bool]] = {r: None for r in radii}

    if d.S == 2:
        if d.belief.is_uniform:
            fosd_count, fosd_fraction = fosd_violations(d)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            dsd_rho = dsd_correlation(d)
        diagonal = {r: almost_diagonal(d, r) for r in radii}
    else:
        logging.info(f"two-state diagnostics skipped for {d.subject_id} (S={d.S})")

    return MetricsRow(
        fosd_count=fosd_count,
        fosd_fraction=fosd_fraction,
        dsd_rho=dsd_rho,
        almost_diagonal=diagonal,
        e_upper_bound=e_upper_bound(d),
        e_upper_bound_cross=e_upper_bound_cross(d),
    )
