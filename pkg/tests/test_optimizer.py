import math

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st
import numpy as np
import pytest

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import risk_neutral_prices
from perturbeu.measures.Behavior import e_upper_bound
from perturbeu.measures.Oracle import oracle_min_e
from perturbeu.measures.Oracle.AxiomOracle import default_max_len
from perturbeu.measures.Perturbation import average_perturbation_solution
from perturbeu.measures.Perturbation import min_avg_perturbation
from perturbeu.measures.Perturbation import min_e_oeu
from perturbeu.measures.Perturbation import min_e_seu
from perturbeu.measures.Perturbation import recover_perturbed_dataset
from perturbeu.simulation import bronars_subject
from perturbeu.simulation import crra_subject
from perturbeu.simulation import random_budgets

TOL = 1e-6

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_subject(seed: int, K: int, S: int = 2) -> Dataset:
    budget_seed, choice_seed = np.random.SeedSequence(seed).spawn(2)
    return bronars_subject(random_budgets(K, S, 5.0, budget_seed), choice_seed)


def assert_solution_bands(d: Dataset, sol) -> None:
    """Recovered epsilon, beliefs and 1 / epsilon all lie in the (1 + e*) band"""
    band = 1.0 + sol.e_star + TOL

    eps = sol.epsilon
    assert np.all(eps.max(axis=1) / eps.min(axis=1) <= band)

    inv = sol.utility_epsilon
    assert np.all(inv.max(axis=1) / inv.min(axis=1) <= band)

    np.testing.assert_allclose(sol.beliefs.sum(axis=1), 1.0)
    weights = sol.beliefs / d.mu[None, :]
    assert np.all(weights.max(axis=1) / weights.min(axis=1) <= band)

    # v = lambda * rho * eps
    np.testing.assert_allclose(
        sol.log_v,
        sol.log_lambda[:, None] + risk_neutral_prices(d).log_rho + np.log(eps),
        atol=1e-9,
    )

    # decreasing marginal utility
    for a, b in d.revealed_pairs():
        assert sol.log_v.ravel()[a] <= sol.log_v.ravel()[b] + TOL


def test_equal_quantities_need_no_perturbation():
    d = Dataset.from_arrays([[1, 3]], [[2, 2]])
    assert min_e_oeu(d).e_star == pytest.approx(0.0, abs=1e-12)


def test_single_observation(single_obs):
    sol = min_e_oeu(single_obs)
    assert sol.e_star == pytest.approx(1.0, abs=1e-9)
    assert sol.kind == "oeu"
    assert ("oeu", 0, 1, 0) in sol.binding
    assert_solution_bands(single_obs, sol)


def test_rational_pair(rational):
    assert min_e_oeu(rational).e_star == pytest.approx(0.0, abs=1e-9)
    assert min_e_seu(rational).e_star == pytest.approx(0.0, abs=1e-9)


def test_subjective_single_observation(single_obs):
    sol = min_e_seu(single_obs)
    assert sol.e_star == pytest.approx(0.0, abs=1e-12)
    assert sol.epsilon is None
    assert sol.utility_epsilon is None
    np.testing.assert_allclose(sol.beliefs.sum(axis=1), 1.0)


def test_subjective_equal_prices():
    d = Dataset.from_arrays([[1, 1], [1, 1]], [[3, 1], [1, 3]])
    assert min_e_seu(d).e_star == pytest.approx(0.0, abs=1e-9)


def test_subjective_beliefs_reproduce_prices():
    d = Dataset.from_arrays([[1, 1], [1, 4]], [[3, 1], [2, 2]])
    sol = min_e_seu(d)
    assert sol.e_star == pytest.approx(oracle_min_e(d, "SEU"), abs=TOL)

    # mu = lambda * p / v
    np.testing.assert_allclose(
        np.log(sol.beliefs),
        sol.log_lambda[:, None] + np.log(d.prices) - sol.log_v,
        atol=1e-9,
    )


def test_average_single_observation(single_obs):
    e_bar, eps = min_avg_perturbation(single_obs)
    assert e_bar == pytest.approx(math.log(2) / 2, abs=1e-9)
    assert eps.shape == (1, 2)


def test_average_rational(rational):
    e_bar, _ = min_avg_perturbation(rational)
    assert e_bar == pytest.approx(0.0, abs=1e-9)


def test_average_e_star_bounds_minimax(warp):
    sol = average_perturbation_solution(warp)
    assert sol.kind == "average"
    assert sol.e_star >= min_e_oeu(warp).e_star - TOL


def test_recover_perturbed_dataset(single_obs):
    sol = min_e_oeu(single_obs)
    q = recover_perturbed_dataset(single_obs, sol)

    np.testing.assert_allclose(q.prices[0, 0] / q.prices[0, 1], 1.0, atol=1e-9)
    np.testing.assert_allclose(q.incomes, single_obs.incomes)
    np.testing.assert_array_equal(q.quantities, single_obs.quantities)


def test_recover_identity(single_obs):
    q = recover_perturbed_dataset(single_obs, np.ones((1, 2)))
    np.testing.assert_allclose(q.prices, single_obs.prices)


def test_recover_rejects_subjective(single_obs):
    with pytest.raises(ValueError, match="subjective"):
        recover_perturbed_dataset(single_obs, min_e_seu(single_obs))


def test_recover_rejects_shape(single_obs):
    with pytest.raises(ValueError, match="shape"):
        recover_perturbed_dataset(single_obs, np.ones((2, 2)))


def test_solution_to_dict(single_obs):
    payload = min_e_oeu(single_obs).to_dict()
    assert payload["kind"] == "oeu"
    assert payload["epsilon"] is not None
    assert payload["e_bar"] is None


@given(
    p=st.lists(st.floats(0.2, 5.0), min_size=2, max_size=2),
    mu1=st.floats(0.1, 0.9),
    x1=st.floats(1.1, 10.0),
)
@settings(max_examples=200, deadline=None)
def test_single_observation_closed_form(p, mu1, x1):
    d = Dataset.from_arrays([p], [[x1, 1.0]], [mu1, 1.0 - mu1])
    rho = risk_neutral_prices(d).rho[0]
    expected = max(rho[0] / rho[1] - 1.0, 0.0)
    assert min_e_oeu(d).e_star == pytest.approx(expected, abs=1e-9, rel=1e-9)


def oracle_lengths(d: Dataset) -> dict:
    # OEU optima sit on simple cycles through at most K * S entries
    return {"OEU": d.K * d.S, "SEU": default_max_len(d)}


@given(seed=seeds, K=st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_matches_oracle_two_states(seed, K):
    d = random_subject(seed, K)
    lengths = oracle_lengths(d)
    assert abs(min_e_oeu(d).e_star - oracle_min_e(d, "OEU", lengths["OEU"])) <= TOL
    assert abs(min_e_seu(d).e_star - oracle_min_e(d, "SEU", lengths["SEU"])) <= TOL


@given(seed=seeds)
@settings(max_examples=10, deadline=None)
def test_matches_oracle_three_states(seed):
    d = random_subject(seed, 1, 3)
    assert abs(min_e_oeu(d).e_star - oracle_min_e(d, "OEU")) <= TOL
    assert abs(min_e_seu(d).e_star - oracle_min_e(d, "SEU")) <= TOL


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_oracle_equivalence_two_states(seed):
    d = random_subject(seed, 1 + seed % 3)
    lengths = oracle_lengths(d)
    assert min_e_oeu(d).e_star == pytest.approx(oracle_min_e(d, "OEU", lengths["OEU"]), abs=TOL)
    assert min_e_seu(d).e_star == pytest.approx(oracle_min_e(d, "SEU", lengths["SEU"]), abs=TOL)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_oracle_equivalence_three_states(seed):
    d = random_subject(1000 + seed, 1 + seed % 2, 3)
    lengths = oracle_lengths(d)
    assert min_e_oeu(d).e_star == pytest.approx(oracle_min_e(d, "OEU", lengths["OEU"]), abs=TOL)
    assert min_e_seu(d).e_star == pytest.approx(oracle_min_e(d, "SEU", lengths["SEU"]), abs=TOL)


@pytest.mark.parametrize("r", [2.0, 4.0, 9.0])
def test_subjective_can_exceed_objective(r):
    # crossing pairs: m = 2 for OEU, one belief factor for SEU
    d = Dataset.from_arrays([[1, 1], [1, r]], [[3, 1], [2, 2]])
    assert min_e_oeu(d).e_star == pytest.approx(math.sqrt(r) - 1.0, abs=1e-9)
    assert min_e_seu(d).e_star == pytest.approx(r - 1.0, abs=1e-9)
    assert oracle_min_e(d, "OEU") == pytest.approx(math.sqrt(r) - 1.0, abs=1e-9)
    assert oracle_min_e(d, "SEU") == pytest.approx(r - 1.0, abs=1e-9)


@given(seed=seeds, K=st.integers(1, 8), S=st.integers(2, 3))
@settings(max_examples=40, deadline=None)
def test_scale_invariance(seed, K, S):
    d = random_subject(seed, K, S)
    scale = np.exp(np.random.default_rng(seed).uniform(-3.0, 3.0, size=K))
    scaled = d.with_prices(d.prices * scale[:, None])

    assert abs(min_e_oeu(scaled).e_star - min_e_oeu(d).e_star) <= 1e-8
    assert abs(min_e_seu(scaled).e_star - min_e_seu(d).e_star) <= 1e-8
    if K <= 2:
        assert abs(oracle_min_e(scaled, "OEU", K * S) - oracle_min_e(d, "OEU", K * S)) <= 1e-9


@given(seed=seeds, K=st.integers(1, 25))
@settings(max_examples=50, deadline=None)
def test_solution_properties(seed, K):
    d = random_subject(seed, K)
    sol = min_e_oeu(d)

    assert sol.e_star >= 0
    assert sol.e_star <= e_upper_bound(d) + 1e-9
    # one belief factor spans two objective ratios
    assert min_e_seu(d).e_star <= (1.0 + sol.e_star) ** 2 - 1.0 + TOL
    assert_solution_bands(d, sol)


@given(seed=seeds, K=st.integers(2, 10))
@settings(max_examples=25, deadline=None)
def test_perturbed_prices_are_rational(seed, K):
    d = random_subject(seed, K)
    q = recover_perturbed_dataset(d, min_e_oeu(d))
    assert min_e_oeu(q).e_star <= TOL


def mixed_subject(seed: int) -> Dataset:
    """Random choosers on even seeds, CRRA maximisers on odd ones"""
    K = 1 + seed % 5
    budget_seed, choice_seed = np.random.SeedSequence(seed).spawn(2)
    b = random_budgets(K, 2, 5.0, budget_seed)
    if seed % 2:
        return crra_subject(b, 0.5 + seed % 7)
    return bronars_subject(b, choice_seed)


@pytest.mark.parametrize("seed", range(100))
def test_average_perturbation_bounds(seed):
    d = mixed_subject(seed)
    e_star = min_e_oeu(d).e_star
    e_bar, _ = min_avg_perturbation(d)

    # centred minimax epsilon is feasible for the average program
    assert e_bar <= math.log1p(e_star) / 2 + 1e-8
    assert e_bar <= (d.S - 1) * math.log1p(e_star) + 1e-8

    # both vanish together
    if e_bar <= 1e-12:
        assert e_star <= TOL
    if seed % 2:
        assert e_star <= TOL
        assert e_bar <= TOL
