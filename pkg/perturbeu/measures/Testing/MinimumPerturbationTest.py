from concurrent.futures import Executor
from dataclasses import asdict
from dataclasses import dataclass
from functools import partial
import logging
import math
from typing import Dict
from typing import Iterable
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import stats

from perturbeu.data.Dataset import Dataset
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_oeu
from perturbeu.utils.errors import CalibrationError
from perturbeu.utils.errors import ValidationError
from perturbeu.utils.utils import jsonable
from perturbeu.utils.validators import validate_non_negative
from perturbeu.utils.validators import validate_unit_interval

MIN_DRAWS: int = 10_000
DEFAULT_DRAWS: int = 200_000

# draws per independently seeded block
BLOCK_SIZE: int = 10_000


@dataclass(frozen=True)
class MPTestParams:
    """
    Parameters of the minimum perturbation test

    Attributes
    ----------
    `eta1` : float
        Type I error probability of the price-variance test

    `eta2` : float
        Type II error probability of the price-variance test

    `alpha` : float
        Nominal size of the final test

    `draws` : int
        Monte Carlo draws of the maximal epsilon ratio

    `seed` : int
        Root seed of the Monte Carlo blocks

    """

    eta1: float = 0.35
    eta2: float = 0.35
    alpha: float = 0.05
    draws: int = DEFAULT_DRAWS
    seed: int = 0

    def __post_init__(self):
        validate_unit_interval(self.eta1, "eta1")
        validate_unit_interval(self.eta2, "eta2")
        validate_unit_interval(self.alpha, "alpha")
        if int(self.draws) < MIN_DRAWS:
            raise ValidationError(f"`draws` must be at least {MIN_DRAWS}, got {self.draws}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"`seed` must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class MPTestResult:
    """Calibration intermediates and the decision of one test"""

    subject_id: str
    sigma_ratio: float
    price_mean: float
    price_var: float
    var_eps: float
    xi2: float
    nu: float
    c_alpha: float
    statistic: float
    reject: bool
    params: MPTestParams

    def to_dict(self) -> dict:
        result = asdict(self)
        result["params"] = asdict(self.params)
        return jsonable(result)


def calibrate_variance_ratio(n: int, eta1: float, eta2: float) -> float:
    """Smallest variance ratio detected with the given error probabilities

    sigma_1^2 / sigma_0^2 = chi2_{1 - eta1, n - 1} / chi2_{eta2, n - 1}

    Raises
    ----------
    CalibrationError
        when n < 2 or the ratio falls below one

    """
    if n < 2:
        raise CalibrationError(f"at least two budget sets are needed, got {n}")
    validate_unit_interval(eta1, "eta1")
    validate_unit_interval(eta2, "eta2")

    upper = stats.chi2.ppf(1.0 - eta1, n - 1)
    lower = stats.chi2.ppf(eta2, n - 1)
    ratio = float(upper / lower)

    if ratio < 1.0:
        raise CalibrationError(
            f"variance ratio {ratio:.6g} < 1 for eta1={eta1}, eta2={eta2}; "
            "lower eta1 + eta2 below one"
        )
    return ratio


def price_moments(d: Dataset) -> Tuple[float, float]:
    """Mean and population variance of the pooled state prices

    Each observation is rescaled to unit income first.

    """
    sample = (d.prices / d.incomes[:, None]).ravel()
    return float(np.mean(sample)), float(np.var(sample))


def epsilon_variance_from_moments(mean: float, var: float, sigma_ratio: float) -> float:
    """Var(eps) = (ratio - 1) / (1 + E[p]^2 / Var(p)), with E[eps] = 1"""
    if not var > 0:
        raise CalibrationError("price sample has zero variance, the test is undefined")
    if sigma_ratio < 1.0:
        raise CalibrationError(f"variance ratio must be at least one, got {sigma_ratio}")
    return (sigma_ratio - 1.0) / (1.0 + mean ** 2 / var)


def epsilon_variance(d: Dataset, sigma_ratio: float) -> float:
    mean, var = price_moments(d)
    return epsilon_variance_from_moments(mean, var, sigma_ratio)


def lognormal_params(var_eps: float) -> Tuple[float, float]:
    """(nu, xi2) of a log-normal perturbation with unit mean

    Returns
    ----------
    (float, float)
        nu = -xi2 / 2 and xi2 = log(1 + var_eps)

    """
    validate_non_negative(var_eps, "var_eps")
    xi2 = math.log1p(var_eps)
    return -xi2 / 2.0, xi2


def _block_log_ratios(
    K: int, S: int, nu: float, xi2: float, size_and_seed: Tuple[int, np.random.SeedSequence]
) -> np.ndarray:
    size, seed = size_and_seed
    rng = np.random.Generator(np.random.Philox(seed))
    log_eps = rng.normal(nu, math.sqrt(xi2), size=(size, K, S))
    return np.max(log_eps.max(axis=2) - log_eps.min(axis=2), axis=1)


def sample_max_ratio(
    K: int,
    S: int,
    xi2: float,
    draws: int,
    seed: int,
    executor: Optional[Executor] = None,
) -> np.ndarray:
    """Draws of log max_{k,s,t} eps[k, s] / eps[k, t]

    Blocks of `BLOCK_SIZE` draws use Philox streams from
    SeedSequence(seed).spawn(n_blocks), so serial and pooled
    runs agree.

    """
    n_blocks = -(-draws // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, draws - i * BLOCK_SIZE) for i in range(n_blocks)]
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    nu = -xi2 / 2.0

    block = partial(_block_log_ratios, K, S, nu, xi2)
    jobs = list(zip(sizes, seeds))
    blocks = executor.map(block, jobs) if executor else map(block, jobs)
    return np.concatenate(list(blocks))


def critical_value(
    K: int,
    S: int,
    xi2: float,
    alpha: float,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    executor: Optional[Executor] = None,
) -> float:
    """Monte Carlo (1 - alpha) quantile of the maximal epsilon ratio

    Parameters
    ----------
    K, S : int
        Dataset shape

    xi2 : float
        Log-scale variance of epsilon

    alpha : float
        Test size

    draws : int
        Monte Carlo sample size, at least 10 000

    seed : int
        Root seed

    Returns
    ----------
    float
        C_alpha >= 1, linear (type 7) quantile interpolation

    """
    validate_non_negative(xi2, "xi2")
    validate_unit_interval(alpha, "alpha")
    if draws < MIN_DRAWS:
        raise ValidationError(f"`draws` must be at least {MIN_DRAWS}, got {draws}")

    if xi2 == 0:
        return 1.0

    log_ratios = sample_max_ratio(K, S, xi2, draws, seed, executor)
    return max(float(np.exp(np.quantile(log_ratios, 1.0 - alpha))), 1.0)


def mp_test(
    d: Dataset,
    params: Optional[MPTestParams] = None,
    e_star: Optional[float] = None,
    executor: Optional[Executor] = None,
) -> MPTestResult:
    """Minimum perturbation test of objective EU rationality

    Calibrates the perturbation variance from the observed
    prices, simulates the distribution of the maximal epsilon
    ratio and rejects when 1 + e* exceeds its critical value.

    Parameters
    ----------
    d : Dataset
        Subject to test

    params : MPTestParams
        Error probabilities, size, draws and seed

    e_star : float, optional
        Precomputed objective e* of `d`

    """
    params = params or MPTestParams()

    sigma_ratio = calibrate_variance_ratio(d.K, params.eta1, params.eta2)
    mean, var = price_moments(d)
    var_eps = epsilon_variance_from_moments(mean, var, sigma_ratio)
    nu, xi2 = lognormal_params(var_eps)
    c_alpha = critical_value(
        d.K, d.S, xi2, params.alpha, params.draws, params.seed, executor
    )

    if e_star is None:
        e_star = min_e_oeu(d).e_star
    statistic = 1.0 + e_star

    logging.info(
        f"MP test for {d.subject_id}: ratio={sigma_ratio:.6g} var_eps={var_eps:.6g} "
        f"xi2={xi2:.6g} C={c_alpha:.6g} statistic={statistic:.6g}"
    )

    return MPTestResult(
        subject_id=d.subject_id,
        sigma_ratio=sigma_ratio,
        price_mean=mean,
        price_var=var,
        var_eps=var_eps,
        xi2=xi2,
        nu=nu,
        c_alpha=c_alpha,
        statistic=statistic,
        reject=statistic > c_alpha,
        params=params,
    )


def mp_test_grid(
    d: Dataset,
    etas: Iterable[float] = (0.05, 0.15, 0.25, 0.35),
    alpha: float = 0.05,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
) -> Dict[Tuple[float, float], Optional[bool]]:
    """Rejection decisions over every (eta1, eta2) pair of `etas`

    Pairs whose variance ratio is below one map to None.

    """
    etas = list(etas)
    e_star = min_e_oeu(d).e_star
    decisions: Dict[Tuple[float, float], Optional[bool]] = {}

    for eta1 in etas:
        for eta2 in etas:
            params = MPTestParams(eta1=eta1, eta2=eta2, alpha=alpha, draws=draws, seed=seed)
            try:
                decisions[(eta1, eta2)] = mp_test(d, params, e_star=e_star).reject
            except CalibrationError as e:
                logging.warning(f"grid point ({eta1}, {eta2}) skipped: {e}")
                decisions[(eta1, eta2)] = None

    return decisions
