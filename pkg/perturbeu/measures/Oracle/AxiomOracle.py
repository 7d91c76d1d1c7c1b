from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
import logging
import math
from typing import Iterator
from typing import List
from typing import Optional
from typing import Tuple
from typing import Union
import warnings

import numpy as np

from perturbeu.data.Dataset import Dataset
from perturbeu.measures.Oracle.utils.sequences import Pair
from perturbeu.measures.Oracle.utils.sequences import TestSequence
from perturbeu.measures.Oracle.utils.sequences import admissible_pairs
from perturbeu.measures.Oracle.utils.sequences import balanced_multisets
from perturbeu.measures.Oracle.utils.sequences import subjective_exponent
from perturbeu.utils.validators import validate_non_negative

MAX_LEN_CAP: int = 12

# float screening margin before falling back to exact arithmetic
SCREEN_MARGIN: float = 1e-9


@dataclass(frozen=True)
class AxiomWitness:
    """
    Test sequence violating a perturbed axiom

    Attributes
    ----------
    `sequence` : TestSequence
        Violating sequence

    `lhs` : float
        Product of (risk neutral) price ratios along the sequence

    `exponent` : float
        m(sigma) for the objective axiom, the belief factor
        count for the subjective one

    `bound` : float
        (1 + e) ** exponent

    """

    sequence: TestSequence
    lhs: float
    bound: float
    exponent: float

    def to_dict(self) -> dict:
        return {
            "pairs": self.sequence.to_list(),
            "lhs": self.lhs,
            "bound": self.bound,
            "exponent": self.exponent,
        }


class _Walk:
    """Enumerated sequences of one dataset with exact and log ratios

    Each sequence comes with the exponent of (1 + e) in its bound:
    m(sigma) for OEU, the belief factor count for SEU.

    """

    def __init__(
        self,
        d: Dataset,
        axiom: str,
        max_len: int,
        tie_tolerance: float = 0.0,
    ):
        self.axiom = axiom.upper()
        if self.axiom not in ("OEU", "SEU"):
            raise ValueError(f"axiom must be 'OEU' or 'SEU', got '{axiom}'")

        self.d = d
        self.max_len = max_len
        self.pairs: List[Pair] = admissible_pairs(d, tie_tolerance)

        # OEU compares risk neutral prices, SEU raw prices
        if self.axiom == "OEU":
            exact = [
                [Fraction(float(p)) / Fraction(float(mu)) for p, mu in zip(row, d.mu)]
                for row in d.prices
            ]
        else:
            exact = [[Fraction(float(p)) for p in row] for row in d.prices]
        self.exact = exact

        self.log_ratio = np.array(
            [
                math.log(exact[a[0]][a[1]]) - math.log(exact[b[0]][b[1]])
                for a, b in self.pairs
            ]
        )

    def __iter__(self) -> Iterator[Tuple[Tuple[int, ...], float, Fraction]]:
        if not self.pairs:
            return

        rows = np.array([[a[0], b[0]] for a, b in self.pairs], dtype=int)
        cols = np.array([[a[1], b[1]] for a, b in self.pairs], dtype=int)

        for chosen in balanced_multisets(
            rows, cols, self.d.K, self.d.S, self.max_len, self.axiom == "SEU"
        ):
            counts: Counter = Counter()
            for i in chosen:
                left, right = self.pairs[i]
                counts[left] += 1
                counts[right] -= 1
            if self.axiom == "OEU":
                exponent = Fraction(sum(c for c in counts.values() if c > 0))
            else:
                exponent = subjective_exponent(counts, self.d.K, self.d.S)
            log_lhs = math.fsum(self.log_ratio[i] for i in chosen)
            yield chosen, log_lhs, exponent

    def exact_lhs(self, chosen: Tuple[int, ...]) -> Fraction:
        lhs = Fraction(1)
        for i in chosen:
            (k, s), (k2, s2) = self.pairs[i]
            lhs *= self.exact[k][s] / self.exact[k2][s2]
        return lhs

    def sequence(self, chosen: Tuple[int, ...]) -> TestSequence:
        return TestSequence(tuple(self.pairs[i] for i in chosen))


def default_max_len(d: Dataset) -> int:
    """K * S * (S - 1), capped for tractability"""
    max_len = d.K * d.S * (d.S - 1)
    if max_len > MAX_LEN_CAP:
        warnings.warn(
            f"Sequence length {max_len} capped at {MAX_LEN_CAP}; "
            "the oracle is exact only up to the cap",
            UserWarning,
            stacklevel=3,
        )
        max_len = MAX_LEN_CAP
    return max_len


def _check(
    d: Dataset, e: float, max_len: Optional[int], axiom: str, tie_tolerance: float
) -> Union[bool, AxiomWitness]:
    validate_non_negative(e, "e")
    if max_len is None:
        max_len = default_max_len(d)

    walk = _Walk(d, axiom, max_len, tie_tolerance)
    log_bound_unit = math.log1p(e)
    exact_unit = Fraction(1) + Fraction(float(e))

    best: Optional[Tuple[float, int, Tuple[int, ...], Fraction]] = None
    n_checked: int = 0

    for chosen, log_lhs, exponent in walk:
        n_checked += 1
        gap = log_lhs - float(exponent) * log_bound_unit

        if gap < -SCREEN_MARGIN:
            continue
        # lhs <= unit ** (p / q) compared as lhs ** q <= unit ** p
        if gap <= SCREEN_MARGIN and (
            walk.exact_lhs(chosen) ** exponent.denominator
            <= exact_unit ** exponent.numerator
        ):
            continue

        # rank violations by per-unit ratio, shorter sequences first
        per_unit = log_lhs / float(exponent) if exponent else math.inf
        key = (per_unit, -len(chosen))
        if best is None or key > best[:2]:
            best = (per_unit, -len(chosen), chosen, exponent)

    logging.info(
        f"{axiom} check of {d.subject_id} at e={e:g}: {n_checked} sequence(s), "
        f"{'violated' if best else 'passed'}"
    )

    if best is None:
        return True

    _, _, chosen, exponent = best
    return AxiomWitness(
        sequence=walk.sequence(chosen),
        lhs=float(walk.exact_lhs(chosen)),
        bound=(1.0 + e) ** float(exponent),
        exponent=float(exponent),
    )


def check_psaroeu(
    d: Dataset, e: float, max_len: Optional[int] = None, tie_tolerance: float = 0.0
) -> Union[bool, AxiomWitness]:
    """Check the e-perturbed objective axiom by enumeration

    For every test sequence of at most `max_len` pairs, the
    product of risk neutral price ratios must not exceed
    (1 + e) ** m(sigma).

    Returns
    ----------
    True or AxiomWitness
        True when no enumerated sequence violates the bound,
        otherwise the violation with the largest per-unit ratio

    """
    return _check(d, e, max_len, "OEU", tie_tolerance)


def check_psarseu(
    d: Dataset, e: float, max_len: Optional[int] = None, tie_tolerance: float = 0.0
) -> Union[bool, AxiomWitness]:
    """Check the e-perturbed subjective axiom by enumeration

    As `check_psaroeu` over state-balanced sequences and raw prices,
    with the bound (1 + e) ** c(sigma). c(sigma) is the fewest
    belief ratio-of-ratios factors that cancel to the sequence's
    net counts (`subjective_exponent`); it lies between m(sigma) / 2
    and m(sigma), and makes the axiom equivalent to the pairwise
    belief bound solved by `min_e_seu`.

    """
    return _check(d, e, max_len, "SEU", tie_tolerance)


def check_saroeu(d: Dataset, max_len: Optional[int] = None) -> bool:
    """Unperturbed objective axiom: every product of ratios is at most one"""
    if max_len is None:
        max_len = default_max_len(d)

    walk = _Walk(d, "OEU", max_len)
    for chosen, log_lhs, _ in walk:
        if log_lhs > SCREEN_MARGIN:
            return False
        if log_lhs > -SCREEN_MARGIN and walk.exact_lhs(chosen) > 1:
            return False
    return True


def oracle_min_e(
    d: Dataset, axiom: str = "OEU", max_len: Optional[int] = None, tie_tolerance: float = 0.0
) -> float:
    """Smallest e satisfying the perturbed axiom, by enumeration

    Maximum over enumerated sequences with a positive exponent of
    lhs ** (1 / exponent) - 1, floored at zero. The exponent is
    m(sigma) for OEU and the belief factor count for SEU. Sequences
    with a zero exponent have a ratio product of exactly one.

    Parameters
    ----------
    d : Dataset
        Dataset to test

    axiom : str
        'OEU' or 'SEU'

    max_len : int, optional
        Longest sequence enumerated. Default K * S * (S - 1), capped at 12

    Returns
    ----------
    float
        Minimal e over the enumerated sequences

    """
    if max_len is None:
        max_len = default_max_len(d)

    walk = _Walk(d, axiom, max_len, tie_tolerance)
    best = 0.0
    for _, log_lhs, exponent in walk:
        if exponent > 0:
            best = max(best, log_lhs / float(exponent))

    return math.expm1(best)
