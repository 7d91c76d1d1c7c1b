from dataclasses import dataclass
import logging
import math
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
from scipy.special import softmax

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import risk_neutral_prices
from perturbeu.measures.Perturbation.utils.programs import RowLabel
from perturbeu.measures.Perturbation.utils.programs import binding_rows
from perturbeu.measures.Perturbation.utils.programs import build_average_program
from perturbeu.measures.Perturbation.utils.programs import build_oeu_program
from perturbeu.measures.Perturbation.utils.programs import build_seu_program
from perturbeu.measures.Perturbation.utils.programs import solve_program
from perturbeu.utils.utils import jsonable


@dataclass(frozen=True, eq=False)
class PerturbationSolution:
    """
    Optimal perturbation of one dataset

    Attributes
    ----------
    `kind` : str
        'oeu', 'seu' or 'average'

    `e_star` : float
        Minimal perturbation bound, full precision

    `log_v` : np.ndarray
        K x S log marginal utilities

    `log_lambda` : np.ndarray
        K log multipliers

    `epsilon` : np.ndarray or None
        K x S price perturbations, None for the subjective measure

    `beliefs` : np.ndarray
        K x S per-observation beliefs, rows sum to one

    `binding` : tuple
        Labels of the inequality rows with a non-zero dual value

    `e_bar` : float or None
        Mean absolute log perturbation ('average' only)

    """

    kind: str
    subject_id: str
    e_star: float
    log_v: np.ndarray
    log_lambda: np.ndarray
    epsilon: Optional[np.ndarray]
    beliefs: np.ndarray
    binding: Tuple[RowLabel, ...] = ()
    e_bar: Optional[float] = None

    @property
    def utility_epsilon(self) -> Optional[np.ndarray]:
        """Utility-form perturbation, 1 / epsilon"""
        if self.epsilon is None:
            return None
        return 1.0 / self.epsilon

    def to_dict(self) -> dict:
        return jsonable(
            {
                "kind": self.kind,
                "subject": self.subject_id,
                "e_star": self.e_star,
                "e_bar": self.e_bar,
                "log_v": self.log_v,
                "log_lambda": self.log_lambda,
                "epsilon": self.epsilon,
                "beliefs": self.beliefs,
                "binding": [list(label) for label in self.binding],
            }
        )


def _centred_epsilon(d: Dataset, log_v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Epsilon with min * max = 1 inside every observation"""
    a = log_v - risk_neutral_prices(d).log_rho
    log_lambda = (a.max(axis=1) + a.min(axis=1)) / 2.0
    return np.exp(a - log_lambda[:, None]), log_lambda


def _objective_beliefs(d: Dataset, epsilon: np.ndarray) -> np.ndarray:
    """mu[k, s] proportional to mu*[s] / eps[k, s]"""
    weights = d.mu[None, :] / epsilon
    return weights / weights.sum(axis=1, keepdims=True)


def _spread(epsilon: np.ndarray) -> float:
    log_eps = np.log(epsilon)
    return float(np.max(log_eps.max(axis=1) - log_eps.min(axis=1)))


def min_e_oeu(d: Dataset, tie_tolerance: float = 0.0) -> PerturbationSolution:
    """Minimal belief perturbation rationalising `d` by objective EU

    Parameters
    ----------
    d : Dataset
        Dataset to measure

    tie_tolerance : float
        Quantity differences at or below this count as ties

    Returns
    ----------
    PerturbationSolution
        e_star = exp(t*) - 1 with geometrically centred epsilon
        and the implied per-observation beliefs

    Raises
    ----------
    SolverError
        when the program is not solved to optimality

    """
    program = build_oeu_program(d, tie_tolerance)
    res = solve_program(program, d.subject_id)

    log_v = program.log_v(res.x)
    epsilon, log_lambda = _centred_epsilon(d, log_v)
    t_star = max(float(res.x[program.n_log_v]), 0.0)

    return PerturbationSolution(
        kind="oeu",
        subject_id=d.subject_id,
        e_star=math.expm1(t_star),
        log_v=log_v,
        log_lambda=log_lambda,
        epsilon=epsilon,
        beliefs=_objective_beliefs(d, epsilon),
        binding=tuple(binding_rows(program, res)),
    )


def min_e_seu(d: Dataset, tie_tolerance: float = 0.0) -> PerturbationSolution:
    """Minimal perturbation rationalising `d` by subjective EU

    Beliefs are recovered after solving as
    log mu[k] = log p[k] - log v[k], normalised per observation.

    """
    program = build_seu_program(d, tie_tolerance)
    res = solve_program(program, d.subject_id)

    log_v = program.log_v(res.x)
    log_weights = np.log(d.prices) - log_v
    beliefs = softmax(log_weights, axis=1)
    # mu = lambda * p / v
    log_lambda = np.log(beliefs[:, 0]) - log_weights[:, 0]
    t_star = max(float(res.x[program.n_log_v]), 0.0)

    return PerturbationSolution(
        kind="seu",
        subject_id=d.subject_id,
        e_star=math.expm1(t_star),
        log_v=log_v,
        log_lambda=log_lambda,
        epsilon=None,
        beliefs=beliefs,
        binding=tuple(binding_rows(program, res)),
    )


def average_perturbation_solution(d: Dataset, tie_tolerance: float = 0.0) -> PerturbationSolution:
    """Least mean absolute log perturbation, full solution

    `e_star` of the result is the largest within-observation
    ratio of the recovered epsilon minus one, an upper bound
    on the minimax e*.

    """
    program = build_average_program(d, tie_tolerance)
    res = solve_program(program, d.subject_id)

    K, S = d.K, d.S
    n = K * S
    lam0, plus0, minus0 = n, n + K, 2 * n + K
    log_eps = (res.x[plus0:minus0] - res.x[minus0:]).reshape(K, S)
    epsilon = np.exp(log_eps)

    return PerturbationSolution(
        kind="average",
        subject_id=d.subject_id,
        e_star=math.expm1(_spread(epsilon)),
        log_v=program.log_v(res.x),
        log_lambda=np.asarray(res.x[lam0:plus0]),
        epsilon=epsilon,
        beliefs=_objective_beliefs(d, epsilon),
        binding=tuple(binding_rows(program, res)),
        e_bar=max(float(res.fun), 0.0),
    )


def min_avg_perturbation(d: Dataset, tie_tolerance: float = 0.0) -> Tuple[float, np.ndarray]:
    """Mean of |log eps| over all K * S entries, minimised

    Returns
    ----------
    (float, np.ndarray)
        e_bar and the K x S recovered epsilon

    """
    sol = average_perturbation_solution(d, tie_tolerance)
    return sol.e_bar, sol.epsilon


def recover_perturbed_dataset(
    d: Dataset, sol: Union[PerturbationSolution, np.ndarray]
) -> Dataset:
    """Dataset at the perturbed prices q = p * eps

    Each observation is rescaled so that q.x = p.x.

    Parameters
    ----------
    d : Dataset
        Original dataset

    sol : PerturbationSolution or np.ndarray
        Objective or average solution for `d`, or a K x S epsilon

    """
    epsilon = sol.epsilon if isinstance(sol, PerturbationSolution) else np.asarray(sol)
    if epsilon is None:
        raise ValueError("`sol` carries no price perturbation (subjective solution)")
    if epsilon.shape != d.prices.shape:
        raise ValueError(f"epsilon shape {epsilon.shape} does not match {d.prices.shape}")

    q = d.prices * epsilon
    q = q * (d.incomes / np.einsum("ks,ks->k", q, d.quantities))[:, None]

    logging.info(f"Perturbed prices recovered for {d.subject_id}")
    return d.with_prices(q)
