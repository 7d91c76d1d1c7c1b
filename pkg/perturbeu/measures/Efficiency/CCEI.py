from dataclasses import dataclass
import logging

import numpy as np

from perturbeu.data.Dataset import Dataset
from perturbeu.utils.validators import validate_positive
from perturbeu.utils.validators import validate_unit_interval


@dataclass(frozen=True, eq=False)
class RevealedRelation:
    """
    Revealed preference at an efficiency level

    Attributes
    ----------
    `weak` : np.ndarray
        K x K, x^k R x^l iff e * I^k >= p^k . x^l

    `strict` : np.ndarray
        K x K, as `weak` with a strict inequality

    `closure` : np.ndarray
        Transitive closure of `weak`

    """

    weak: np.ndarray
    strict: np.ndarray
    closure: np.ndarray

    @property
    def violations(self) -> np.ndarray:
        """(k, l) with k R* l and l strictly revealed over k"""
        return np.argwhere(self.closure & self.strict.T)


def transitive_closure(relation: np.ndarray) -> np.ndarray:
    """Closure of a boolean relation by repeated squaring"""
    closure = np.asarray(relation, dtype=bool).copy()
    while True:
        step = closure | ((closure.astype(np.int64) @ closure.astype(np.int64)) > 0)
        if np.array_equal(step, closure):
            return closure
        closure = step


def expenditure_matrix(d: Dataset) -> np.ndarray:
    """cost[k, l] = p^k . x^l"""
    return d.prices @ d.quantities.T


def revealed_relation(d: Dataset, efficiency: float = 1.0) -> RevealedRelation:
    cost = expenditure_matrix(d)
    budget = efficiency * d.incomes[:, None]
    weak = budget >= cost
    strict = budget > cost
    return RevealedRelation(weak=weak, strict=strict, closure=transitive_closure(weak))


def garp_holds(d: Dataset, efficiency: float = 1.0) -> bool:
    """GARP at the given efficiency level

    True iff there are no k, l with x^k revealed preferred
    (through the closure) to x^l while x^l is strictly
    revealed preferred to x^k.

    """
    validate_unit_interval(efficiency, "efficiency", closed_right=True)
    return _garp_holds(d, efficiency)


def _garp_holds(d: Dataset, efficiency: float) -> bool:
    return not revealed_relation(d, efficiency).violations.size


def critical_ratios(d: Dataset) -> np.ndarray:
    """Sorted off-diagonal ratios p^k . x^l / I^k inside (0, 1)

    The revealed relations only change at these efficiency levels.

    """
    ratios = expenditure_matrix(d) / d.incomes[:, None]
    off_diagonal = ratios[~np.eye(d.K, dtype=bool)]
    return np.unique(off_diagonal[(off_diagonal > 0) & (off_diagonal < 1)])


def ccei(d: Dataset, tol: float = 1e-6) -> float:
    """Critical cost efficiency index

    Bisection on the efficiency level between the smallest
    critical ratio, where nothing is strictly revealed off the
    diagonal, and one. The final bracket is snapped to the
    critical ratio it contains.

    Parameters
    ----------
    d : Dataset
        Dataset to measure

    tol : float
        Bisection tolerance

    Returns
    ----------
    float
        Largest efficiency in (0, 1] at which GARP holds
        (the supremum, which is not attained)

    """
    validate_positive(tol, "tol")

    if _garp_holds(d, 1.0):
        logging.info(f"GARP holds for {d.subject_id}, CCEI = 1")
        return 1.0

    # a violation needs a strict relation, so this is never empty here
    critical = critical_ratios(d)
    lo, hi = float(critical[0]), 1.0
    n_steps: int = 0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if _garp_holds(d, mid):
            lo = mid
        else:
            hi = mid
        n_steps += 1

    value = _critical_ratio(d, critical[(critical > lo) & (critical <= hi)], lo, hi)

    logging.info(
        f"CCEI of {d.subject_id}: {value:.6f} after {n_steps} bisection step(s) "
        f"from {critical[0]:.6f}"
    )
    return value


def _critical_ratio(d: Dataset, candidates: np.ndarray, lo: float, hi: float) -> float:
    """First ratio in (lo, hi] past which GARP fails"""
    upper = np.append(candidates[1:], hi)
    for c, nxt in zip(candidates, upper):
        level = (c + nxt) / 2.0 if nxt > c else c
        if not _garp_holds(d, level):
            return float(c)
    return lo
