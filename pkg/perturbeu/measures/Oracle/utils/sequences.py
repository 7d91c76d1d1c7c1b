from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict
from typing import Iterator
from typing import List
from typing import Sequence
from typing import Tuple

import numpy as np
from scipy.optimize import linprog

from perturbeu.data.Dataset import Dataset
from perturbeu.utils.errors import InvalidSequenceError

Entry = Tuple[int, int]
Pair = Tuple[Entry, Entry]


@dataclass(frozen=True)
class TestSequence:
    """
    Ordered pairs ((k, s), (k', s')) of consumption entries

    Indices are zero-based. A valid sequence has x[k][s] > x[k'][s']
    for every pair and each observation k appears as often on the
    left as on the right.

    """

    __test__ = False

    pairs: Tuple[Pair, ...]

    def __post_init__(self):
        pairs = tuple(
            ((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))) for a, b in self.pairs
        )
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def to_list(self) -> List[List[int]]:
        return [[k, s, k2, s2] for (k, s), (k2, s2) in self.pairs]


@dataclass(frozen=True)
class SequenceStats:
    """
    Net occurrence counts of a test sequence

    Attributes
    ----------
    `d` : dict
        (k, s) -> left occurrences minus right occurrences,
        entries with zero net count omitted

    `m` : int
        Sum of the positive counts

    """

    d: Dict[Entry, int]
    m: int


def _counts(pairs: Sequence[Pair]) -> Counter:
    counts: Counter = Counter()
    for left, right in pairs:
        counts[left] += 1
        counts[right] -= 1
    return counts


def sequence_stats(sigma: TestSequence, d: Dataset, tie_tolerance: float = 0.0) -> SequenceStats:
    """Net counts d(sigma, k, s) and m(sigma)

    Raises
    ----------
    InvalidSequenceError
        when a pair is not strictly ordered or the observation
        counts on both sides differ

    """
    x = d.quantities
    observation_balance: Counter = Counter()

    for i, ((k, s), (k2, s2)) in enumerate(sigma.pairs):
        if not (0 <= k < d.K and 0 <= k2 < d.K and 0 <= s < d.S and 0 <= s2 < d.S):
            raise InvalidSequenceError(f"pair {i} indexes outside the dataset")
        if not x[k, s] - x[k2, s2] > tie_tolerance:
            raise InvalidSequenceError(
                f"pair {i}: x[{k}][{s}]={x[k, s]:g} is not larger than x[{k2}][{s2}]={x[k2, s2]:g}"
            )
        observation_balance[k] += 1
        observation_balance[k2] -= 1

    unbalanced = sorted(k for k, v in observation_balance.items() if v != 0)
    if unbalanced:
        raise InvalidSequenceError(
            f"observation(s) {unbalanced} appear unequally on the two sides"
        )

    counts = _counts(sigma.pairs)
    net = {entry: c for entry, c in sorted(counts.items()) if c != 0}
    m = sum(c for c in net.values() if c > 0)

    return SequenceStats(d=net, m=m)


# largest denominator expected at a vertex of the factor program
EXPONENT_DENOMINATOR: int = 1000


@lru_cache(maxsize=65536)
def _factor_program(net: Tuple[Tuple[Entry, int], ...], K: int, S: int) -> Fraction:
    rectangles = [
        (k, l, s, t)
        for k in range(K)
        for l in range(k + 1, K)
        for s in range(S)
        for t in range(s + 1, S)
    ]
    if not rectangles:
        raise InvalidSequenceError("net counts do not cancel into belief factors")

    # column j: +(k, s) -(k, t) -(l, s) +(l, t); its negative is the reversed factor
    A = np.zeros((K * S, len(rectangles)))
    for j, (k, l, s, t) in enumerate(rectangles):
        A[k * S + s, j] += 1.0
        A[k * S + t, j] -= 1.0
        A[l * S + s, j] -= 1.0
        A[l * S + t, j] += 1.0

    b = np.zeros(K * S)
    for (k, s), c in net:
        b[k * S + s] = c

    res = linprog(
        np.ones(2 * len(rectangles)),
        A_eq=np.hstack([A, -A]),
        b_eq=b,
        bounds=(0.0, None),
        method="highs-ds",
    )
    if res.status != 0:
        raise InvalidSequenceError("net counts do not cancel into belief factors")

    return Fraction(float(res.fun)).limit_denominator(EXPONENT_DENOMINATOR)


def subjective_exponent(net: Dict[Entry, int], K: int, S: int) -> Fraction:
    """Fewest belief ratio-of-ratios factors cancelling to `net`

    A factor (mu[k, s] / mu[k, t]) / (mu[l, s] / mu[l, t]) adds one
    to (k, s) and (l, t) and removes one from (k, t) and (l, s).
    Net counts of a state balanced sequence are a combination of
    such factors; the exponent is the least total weight. With two
    states it is m(sigma) / 2, and it never exceeds m(sigma).

    Parameters
    ----------
    net : dict
        (k, s) -> net count, as in `SequenceStats.d`

    Returns
    ----------
    Fraction
        Zero for an empty net count

    Raises
    ----------
    InvalidSequenceError
        when some observation or state is unbalanced

    """
    net = {entry: c for entry, c in net.items() if c != 0}
    if not net:
        return Fraction(0)

    row_sums: Counter = Counter()
    col_sums: Counter = Counter()
    for (k, s), c in net.items():
        row_sums[k] += c
        col_sums[s] += c
    if any(row_sums.values()) or any(col_sums.values()):
        raise InvalidSequenceError("net counts are not balanced in observations and states")

    if S == 2:
        return Fraction(sum(c for (_, s), c in net.items() if s == 0 and c > 0))

    return _factor_program(tuple(sorted(net.items())), K, S)


def balanced_multisets(
    pair_rows: np.ndarray,
    pair_cols: np.ndarray,
    n_rows: int,
    n_cols: int,
    max_len: int,
    balance_cols: bool,
) -> Iterator[Tuple[int, ...]]:
    """Multisets of pair indices with balanced row (and column) counts

    Pair i moves one unit from row `pair_rows[i, 1]` to row
    `pair_rows[i, 0]`; a multiset is balanced when every row has
    net zero. Multisets are produced once, as non-decreasing
    index tuples.

    """
    n_pairs = len(pair_rows)
    row_balance = np.zeros(n_rows, dtype=int)
    col_balance = np.zeros(n_cols, dtype=int)
    chosen: List[int] = []

    def excess(balance: np.ndarray) -> int:
        return int(balance[balance > 0].sum())

    def walk(start: int) -> Iterator[Tuple[int, ...]]:
        remaining = max_len - len(chosen)
        for i in range(start, n_pairs):
            row_balance[pair_rows[i, 0]] += 1
            row_balance[pair_rows[i, 1]] -= 1
            if balance_cols:
                col_balance[pair_cols[i, 0]] += 1
                col_balance[pair_cols[i, 1]] -= 1
            chosen.append(i)

            row_excess = excess(row_balance)
            col_excess = excess(col_balance) if balance_cols else 0

            if row_excess == 0 and col_excess == 0:
                yield tuple(chosen)

            # each further pair removes at most one unit of excess
            if remaining > 1 and max(row_excess, col_excess) <= remaining - 1:
                yield from walk(i)

            chosen.pop()
            row_balance[pair_rows[i, 0]] -= 1
            row_balance[pair_rows[i, 1]] += 1
            if balance_cols:
                col_balance[pair_cols[i, 0]] -= 1
                col_balance[pair_cols[i, 1]] += 1

    if max_len >= 1 and n_pairs:
        yield from walk(0)


def admissible_pairs(d: Dataset, tie_tolerance: float = 0.0) -> List[Pair]:
    """All strictly ordered entry pairs of `d`, row-major"""
    return [
        (d.entry(a), d.entry(b)) for a, b in d.revealed_pairs(tie_tolerance)
    ]


def enumerate_test_sequences(
    d: Dataset,
    max_len: int,
    balanced_states: bool = False,
    tie_tolerance: float = 0.0,
) -> Iterator[TestSequence]:
    """Every test sequence of at most `max_len` pairs

    Parameters
    ----------
    d : Dataset
        Source of the quantities

    max_len : int
        Maximum number of pairs, repetitions included

    balanced_states : bool
        Additionally require each state to appear as often
        on the left as on the right

    Returns
    ----------
    Iterator[TestSequence]
        Each sequence once, pairs in canonical sorted order

    """
    if max_len < 1:
        raise ValueError("`max_len` must be at least 1")

    pairs = admissible_pairs(d, tie_tolerance)
    if not pairs:
        return

    rows = np.array([[a[0], b[0]] for a, b in pairs], dtype=int)
    cols = np.array([[a[1], b[1]] for a, b in pairs], dtype=int)

    for chosen in balanced_multisets(rows, cols, d.K, d.S, max_len, balanced_states):
        yield TestSequence(tuple(pairs[i] for i in chosen))
