from dataclasses import dataclass
import logging
import math
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Union

import numpy as np
from scipy import stats

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import ObjectiveBelief
from perturbeu.data.Dataset import Observation
from perturbeu.utils.errors import ValidationError
from perturbeu.utils.validators import validate_non_negative
from perturbeu.utils.validators import validate_positive

Seed = Union[int, np.random.SeedSequence, np.random.Generator]

DEFAULT_RATIO_BOUND: float = 5.0

SIMULATION_KINDS = ("bronars", "crra", "perturbed")


def make_rng(seed: Seed) -> np.random.Generator:
    """Philox generator from an integer, SeedSequence or generator"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True, eq=False)
class BudgetSet:
    """
    K budgets: strictly positive prices and incomes

    Attributes
    ----------
    `prices` : np.ndarray
        K x S state prices

    `incomes` : np.ndarray
        K incomes, ones for synthetic budgets

    """

    prices: np.ndarray
    incomes: np.ndarray = None

    def __post_init__(self):
        prices = np.atleast_2d(np.asarray(self.prices, dtype=float))
        if prices.shape[1] < 2:
            raise ValidationError("budgets need at least two states")
        if not np.all(prices > 0):
            raise ValidationError("budget prices must be strictly positive")

        incomes = (
            np.ones(prices.shape[0])
            if self.incomes is None
            else np.asarray(self.incomes, dtype=float).ravel()
        )
        if incomes.shape != (prices.shape[0],) or not np.all(incomes > 0):
            raise ValidationError("one strictly positive income per budget is required")

        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "incomes", incomes)

    @property
    def K(self) -> int:
        return self.prices.shape[0]

    @property
    def S(self) -> int:
        return self.prices.shape[1]


def random_budgets(
    K: int, S: int = 2, ratio_bound: float = DEFAULT_RATIO_BOUND, seed: Seed = 0
) -> BudgetSet:
    """Unit-income budgets with log price ratios uniform on [-log r, log r]

    The first state's price is one; every other state's price
    relative to it is drawn independently.

    """
    validate_positive(K, "K")
    if ratio_bound < 1:
        raise ValidationError(f"`ratio_bound` must be at least 1, got {ratio_bound}")

    rng = make_rng(seed)
    bound = math.log(ratio_bound)
    log_p = np.zeros((K, S))
    log_p[:, 1:] = rng.uniform(-bound, bound, size=(K, S - 1))
    return BudgetSet(prices=np.exp(log_p))


def budgets_from_dataset(d: Dataset) -> BudgetSet:
    """Budgets faced in `d`, rescaled to unit income"""
    return BudgetSet(prices=d.prices / d.incomes[:, None])


def _dataset(b: BudgetSet, x: np.ndarray, mu: Optional[ObjectiveBelief], subject_id: str) -> Dataset:
    observations = [Observation(p, q) for p, q in zip(b.prices, x)]
    return Dataset(subject_id=subject_id, observations=observations, belief=mu)


def bronars_subject(b: BudgetSet, seed: Seed = 0, subject_id: str = "bronars") -> Dataset:
    """Uniformly random choices on every budget line

    With two states the expenditure share on the first state
    is uniform on [0, 1]; with more states the shares are
    flat-Dirichlet.

    """
    rng = make_rng(seed)
    if b.S == 2:
        w = rng.uniform(0.0, 1.0, size=b.K)
        shares = np.column_stack((w, 1.0 - w))
    else:
        shares = rng.dirichlet(np.ones(b.S), size=b.K)

    x = shares * b.incomes[:, None] / b.prices
    return _dataset(b, x, None, subject_id)


def _crra_choice(
    perceived: np.ndarray, prices: np.ndarray, incomes: np.ndarray, gamma: float, mu: np.ndarray
) -> np.ndarray:
    """x[k, s] proportional to (perceived[k, s] / mu[s]) ** (-1 / gamma), with p.x = I"""
    log_x = -np.log(perceived / mu[None, :]) / gamma
    # shift before exponentiating, large gamma keeps the shape
    shape = np.exp(log_x - log_x.max(axis=1, keepdims=True))
    return shape * (incomes / np.einsum("ks,ks->k", prices, shape))[:, None]


def _belief(mu: Optional[Union[ObjectiveBelief, Sequence[float]]], S: int) -> ObjectiveBelief:
    if mu is None:
        return ObjectiveBelief.uniform(S)
    if isinstance(mu, ObjectiveBelief):
        return mu
    return ObjectiveBelief(mu)


def crra_subject(
    b: BudgetSet,
    gamma: float,
    mu: Optional[Union[ObjectiveBelief, Sequence[float]]] = None,
    subject_id: str = "crra",
) -> Dataset:
    """Expected utility maximiser with u(x) = x ** (1 - gamma) / (1 - gamma)

    Parameters
    ----------
    b : BudgetSet
        Budgets to choose on

    gamma : float
        Relative risk aversion, strictly positive

    mu : ObjectiveBelief, optional
        Objective belief, uniform by default

    """
    validate_positive(gamma, "gamma")
    belief = _belief(mu, b.S)
    x = _crra_choice(b.prices, b.prices, b.incomes, gamma, belief.probs)
    return _dataset(b, x, belief, subject_id)


def draw_price_perturbation(K: int, S: int, xi2: float, seed: Seed = 0) -> np.ndarray:
    """K x S iid log-normal(-xi2 / 2, xi2) perturbations, unit mean"""
    validate_non_negative(xi2, "xi2")
    rng = make_rng(seed)
    return np.exp(rng.normal(-xi2 / 2.0, math.sqrt(xi2), size=(K, S)))


def perturbed_eu_subject(
    b: BudgetSet,
    gamma: float,
    mu: Optional[Union[ObjectiveBelief, Sequence[float]]] = None,
    xi2: float = 0.0,
    seed: Seed = 0,
    subject_id: str = "perturbed",
) -> Dataset:
    """CRRA maximiser that misperceives prices as p * eps

    Choices are optimal at the perceived prices and scaled to
    exhaust the true income; the dataset records the true prices.
    `eps` is `draw_price_perturbation(K, S, xi2, seed)`.

    """
    validate_positive(gamma, "gamma")
    belief = _belief(mu, b.S)
    eps = draw_price_perturbation(b.K, b.S, xi2, seed)
    x = _crra_choice(b.prices * eps, b.prices, b.incomes, gamma, belief.probs)
    return _dataset(b, x, belief, subject_id)


def bronars_cohort(
    budget_pool: Union[BudgetSet, Sequence[BudgetSet]],
    n: int,
    seed: int = 0,
    prefix: str = "bronars",
) -> List[Dataset]:
    """`n` random choosers, each on a budget set drawn from the pool"""
    pool = [budget_pool] if isinstance(budget_pool, BudgetSet) else list(budget_pool)
    if not pool:
        raise ValidationError("budget pool is empty")

    cohort: List[Dataset] = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        rng = make_rng(child)
        b = pool[int(rng.integers(len(pool)))]
        cohort.append(bronars_subject(b, rng, subject_id=f"{prefix}{i + 1:04d}"))

    logging.info(f"{n} Bronars subject(s) simulated from {len(pool)} budget set(s)")
    return cohort


def simulate_cohort(
    kind: str,
    n: int,
    K: int,
    S: int = 2,
    seed: int = 0,
    gamma: Optional[float] = None,
    gamma_range: Sequence[float] = (0.5, 10.0),
    xi2: float = 0.0,
    ratio_bound: float = DEFAULT_RATIO_BOUND,
    mu: Optional[Sequence[float]] = None,
    budget_pool: Optional[Sequence[BudgetSet]] = None,
) -> List[Dataset]:
    """Synthetic cohort of one kind

    Every subject gets its own child seed; budgets come from
    `budget_pool` when given, otherwise from `random_budgets`.
    Without a fixed `gamma`, risk aversion is drawn uniformly
    from `gamma_range`.

    """
    if kind not in SIMULATION_KINDS:
        raise ValidationError(f"kind must be one of {SIMULATION_KINDS}, got '{kind}'")

    if kind == "bronars" and budget_pool:
        return bronars_cohort(budget_pool, n, seed)

    cohort: List[Dataset] = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        budget_seed, choice_seed = child.spawn(2)
        rng = make_rng(choice_seed)
        if budget_pool:
            b = budget_pool[int(rng.integers(len(budget_pool)))]
        else:
            b = random_budgets(K, S, ratio_bound, budget_seed)
        subject_id = f"{kind}{i + 1:04d}"

        if kind == "bronars":
            cohort.append(bronars_subject(b, rng, subject_id))
            continue

        g = gamma if gamma is not None else float(rng.uniform(*gamma_range))
        if kind == "crra":
            cohort.append(crra_subject(b, g, mu, subject_id))
        else:
            cohort.append(perturbed_eu_subject(b, g, mu, xi2, rng, subject_id))

    logging.info(f"{n} {kind} subject(s) simulated")
    return cohort


def compare_distributions(observed: Sequence[float], simulated: Sequence[float]) -> Dict[str, float]:
    """Two-sample Kolmogorov-Smirnov comparison of e* samples"""
    observed = np.asarray(observed, dtype=float)
    simulated = np.asarray(simulated, dtype=float)
    if not observed.size or not simulated.size:
        raise ValidationError("both samples need at least one value")

    res = stats.ks_2samp(observed, simulated)
    return {
        "ks_statistic": float(res.statistic),
        "p_value": float(res.pvalue),
        "observed_mean": float(observed.mean()),
        "simulated_mean": float(simulated.mean()),
        "n_observed": int(observed.size),
        "n_simulated": int(simulated.size),
    }
