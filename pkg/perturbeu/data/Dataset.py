from dataclasses import dataclass
from dataclasses import field
from functools import cached_property
from typing import Iterable
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from perturbeu.utils.errors import ValidationError
from perturbeu.utils.validators import validate_belief


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ObjectiveBelief:
    """
    Objective probability over states

    Attributes
    ----------
    `probs` : np.ndarray
        Strictly positive probabilities summing to one

    """

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(validate_belief(self.probs)))

    @classmethod
    def uniform(cls, n_states: int) -> "ObjectiveBelief":
        return cls(np.full(n_states, 1.0 / n_states))

    @property
    def n_states(self) -> int:
        return int(self.probs.size)

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.probs, self.probs[0], rtol=0, atol=1e-12))

    def __eq__(self, o: object) -> bool:
        if isinstance(o, ObjectiveBelief):
            return bool(np.array_equal(self.probs, o.probs))
        return False

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class Observation:
    """
    One purchase of a state-contingent payoff

    Attributes
    ----------
    `prices` : np.ndarray
        Strictly positive state prices

    `quantities` : np.ndarray
        Non-negative chosen payoffs

    `income` : float
        Derived expenditure p.x

    """

    prices: np.ndarray
    quantities: np.ndarray

    def __post_init__(self):
        p = _frozen(self.prices)
        x = _frozen(self.quantities)

        if p.ndim != 1 or p.shape != x.shape:
            raise ValidationError(
                f"prices {p.shape} and quantities {x.shape} must be equal-length vectors"
            )
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValidationError(f"prices must be strictly positive, got {p.tolist()}")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValidationError(f"quantities must be non-negative, got {x.tolist()}")
        if not float(p @ x) > 0:
            raise ValidationError("income p.x must be positive")

        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "quantities", x)

    @property
    def income(self) -> float:
        return float(self.prices @ self.quantities)

    @property
    def n_states(self) -> int:
        return int(self.prices.size)

    def __eq__(self, o: object) -> bool:
        if isinstance(o, Observation):
            return bool(
                np.array_equal(self.prices, o.prices)
                and np.array_equal(self.quantities, o.quantities)
            )
        return False

    def __hash__(self) -> int:
        return hash((self.prices.tobytes(), self.quantities.tobytes()))


@dataclass(frozen=True)
class RiskNeutralPrices:
    """
    Risk neutral prices rho[k][s] = p[k][s] / mu[s]

    Attributes
    ----------
    `rho` : np.ndarray
        K x S matrix of strictly positive reals

    """

    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", _frozen(self.rho))

    @property
    def log_rho(self) -> np.ndarray:
        return np.log(self.rho)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    A subject's K observations plus the objective belief

    Attributes
    ----------
    `subject_id` : str
        Subject identifier

    `observations` : tuple of Observation
        Observations in trial order

    `belief` : ObjectiveBelief
        Objective probability over states

    Methods
    -------
    `subset()`
        Dataset restricted to some observations

    `with_prices()`
        Same choices against other prices

    `with_belief()`
        Same observations with another objective belief

    `revealed_pairs()`
        Index pairs of strictly ordered consumption entries

    """

    subject_id: str
    observations: Tuple[Observation, ...]
    belief: ObjectiveBelief = field(default=None)

    def __post_init__(self):
        observations = tuple(self.observations)
        object.__setattr__(self, "observations", observations)
        object.__setattr__(self, "subject_id", str(self.subject_id))

        if not observations:
            raise ValidationError("dataset needs at least one observation", self.subject_id)

        n_states = {obs.n_states for obs in observations}
        if len(n_states) != 1:
            raise ValidationError(
                "all observations must share the number of states", self.subject_id
            )
        (S,) = n_states
        if S < 2:
            raise ValidationError("at least two states are required", self.subject_id)

        if self.belief is None:
            object.__setattr__(self, "belief", ObjectiveBelief.uniform(S))
        elif self.belief.n_states != S:
            raise ValidationError(
                f"belief has {self.belief.n_states} states, observations have {S}",
                self.subject_id,
            )

    @classmethod
    def from_arrays(
        cls,
        prices: Sequence[Sequence[float]],
        quantities: Sequence[Sequence[float]],
        mu: Optional[Sequence[float]] = None,
        subject_id: str = "subject",
    ) -> "Dataset":
        prices = np.atleast_2d(np.asarray(prices, dtype=float))
        quantities = np.atleast_2d(np.asarray(quantities, dtype=float))

        if prices.shape != quantities.shape:
            raise ValidationError(
                f"prices {prices.shape} and quantities {quantities.shape} differ",
                subject_id,
            )

        observations = [Observation(p, x) for p, x in zip(prices, quantities)]
        belief = ObjectiveBelief(mu) if mu is not None else None
        return cls(subject_id=subject_id, observations=observations, belief=belief)

    def __len__(self) -> int:
        return len(self.observations)

    def __repr__(self) -> str:
        return f"<Dataset {self.subject_id} K={self.K} S={self.S}>"

    @property
    def K(self) -> int:
        return len(self.observations)

    @property
    def S(self) -> int:
        return self.observations[0].n_states

    @property
    def mu(self) -> np.ndarray:
        return self.belief.probs

    @cached_property
    def prices(self) -> np.ndarray:
        return _frozen(np.vstack([obs.prices for obs in self.observations]))

    @cached_property
    def quantities(self) -> np.ndarray:
        return _frozen(np.vstack([obs.quantities for obs in self.observations]))

    @cached_property
    def incomes(self) -> np.ndarray:
        return _frozen(np.einsum("ks,ks->k", self.prices, self.quantities))

    def subset(self, indices: Iterable[int]) -> "Dataset":
        indices = list(indices)
        return Dataset(
            subject_id=self.subject_id,
            observations=[self.observations[i] for i in indices],
            belief=self.belief,
        )

    def drop(self, indices: Iterable[int]) -> "Dataset":
        dropped = set(indices)
        return self.subset(i for i in range(self.K) if i not in dropped)

    def with_prices(self, prices: np.ndarray) -> "Dataset":
        return Dataset.from_arrays(
            prices, self.quantities, self.mu, subject_id=self.subject_id
        )

    def with_belief(self, mu: Sequence[float]) -> "Dataset":
        return Dataset(
            subject_id=self.subject_id,
            observations=self.observations,
            belief=ObjectiveBelief(mu),
        )

    def revealed_pairs(self, tie_tolerance: float = 0.0) -> np.ndarray:
        """Index pairs of strictly ordered consumption entries

        Entries are flattened as k * S + s. A pair (a, b) is
        returned whenever x_a - x_b > `tie_tolerance`.

        Returns
        ----------
        np.ndarray
            (n_pairs, 2) integer array, row-major order

        """
        flat = self.quantities.ravel()
        diff = flat[:, None] - flat[None, :]
        left, right = np.nonzero(diff > tie_tolerance)
        return np.column_stack((left, right)).astype(int)

    def entry(self, flat_index: int) -> Tuple[int, int]:
        return divmod(int(flat_index), self.S)


def risk_neutral_prices(d: Dataset) -> RiskNeutralPrices:
    """Risk neutral prices of every observation

    Parameters
    ----------
    d : Dataset
        Validated dataset

    Returns
    ----------
    RiskNeutralPrices
        rho[k][s] = p[k][s] / mu[s]

    """
    return RiskNeutralPrices(d.prices / d.mu[None, :])

