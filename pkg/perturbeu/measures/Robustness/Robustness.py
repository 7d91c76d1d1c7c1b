from concurrent.futures import Executor
from dataclasses import dataclass
from dataclasses import field
from datetime import datetime
from functools import partial
from itertools import combinations
import logging
from typing import Dict
from typing import Iterable
from typing import Optional
from typing import Tuple

from perturbeu.data.Dataset import Dataset
from perturbeu.measures.Perturbation.PerturbationSolver import min_avg_perturbation
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_oeu
from perturbeu.utils.errors import ValidationError

# e* values closer than this are treated as equal when picking a subset
TIE_TOLERANCE: float = 1e-9


@dataclass
class RobustnessRow:
    """
    Sensitivity of e* to a few observations

    Attributes
    ----------
    `e_full` : float
        e* on all observations

    `e_drop` : dict
        m -> smallest e* after dropping m observations,
        None when m >= K

    `dropped` : dict
        m -> zero-based indices of the dropped observations

    `e_bar` : float
        Least mean absolute log perturbation

    """

    e_full: float
    e_drop: Dict[int, Optional[float]] = field(default_factory=dict)
    dropped: Dict[int, Optional[Tuple[int, ...]]] = field(default_factory=dict)
    e_bar: Optional[float] = None

    @property
    def e_drop1(self) -> Optional[float]:
        return self.e_drop.get(1)

    @property
    def e_drop2(self) -> Optional[float]:
        return self.e_drop.get(2)

    def to_dict(self) -> dict:
        row: dict = {"e_full": self.e_full}
        for m in sorted(self.e_drop):
            row[f"e_drop{m}"] = self.e_drop[m]
            dropped = self.dropped.get(m)
            row[f"dropped{m}"] = (
                None if dropped is None else " ".join(str(i) for i in dropped)
            )
        row["e_bar"] = self.e_bar
        return row


def _subset_e_star(d: Dataset, tie_tolerance: float, dropped: Tuple[int, ...]) -> float:
    return min_e_oeu(d.drop(dropped), tie_tolerance).e_star


def drop_m_min_e(
    d: Dataset,
    m: int,
    tie_tolerance: float = 0.0,
    executor: Optional[Executor] = None,
) -> Tuple[float, Tuple[int, ...]]:
    """Smallest e* after dropping `m` observations

    Subsets are visited in lexicographic order of the dropped
    indices; among (near) ties the first one is kept.

    Parameters
    ----------
    d : Dataset
        Dataset to measure

    m : int
        Number of observations to drop, 0 <= m < K

    executor : Executor, optional
        Pool used to solve the subsets, results are consumed
        in submission order

    Returns
    ----------
    (float, tuple of int)
        e* and the zero-based dropped indices

    """
    if not 0 <= m < d.K:
        raise ValidationError(f"cannot drop {m} of {d.K} observations", d.subject_id)

    if m == 0:
        return min_e_oeu(d, tie_tolerance).e_star, ()

    start = datetime.now()
    subsets = list(combinations(range(d.K), m))
    solve = partial(_subset_e_star, d, tie_tolerance)
    values: Iterable[float] = executor.map(solve, subsets) if executor else map(solve, subsets)

    best_e: float = float("inf")
    best_subset: Tuple[int, ...] = ()
    for subset, e in zip(subsets, values):
        if e < best_e - TIE_TOLERANCE:
            best_e, best_subset = e, subset

    logging.info(
        f"drop-{m} for {d.subject_id}: {len(subsets)} subset(s) in "
        f"{datetime.now() - start}, e*={best_e:.6g} without {list(best_subset)}"
    )
    return best_e, best_subset


def average_perturbation(d: Dataset, tie_tolerance: float = 0.0) -> float:
    """Least mean absolute log perturbation e_bar"""
    e_bar, _ = min_avg_perturbation(d, tie_tolerance)
    return e_bar


def robustness_row(
    d: Dataset,
    drops: Iterable[int] = (1, 2),
    tie_tolerance: float = 0.0,
    executor: Optional[Executor] = None,
    e_full: Optional[float] = None,
) -> RobustnessRow:
    """Drop-m and average perturbation variants of e*"""
    if e_full is None:
        e_full = min_e_oeu(d, tie_tolerance).e_star

    row = RobustnessRow(e_full=e_full)
    for m in drops:
        if m < d.K:
            row.e_drop[m], row.dropped[m] = drop_m_min_e(d, m, tie_tolerance, executor)
        else:
            row.e_drop[m], row.dropped[m] = None, None

    row.e_bar = average_perturbation(d, tie_tolerance)
    return row
