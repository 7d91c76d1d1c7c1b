from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
import math

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st
import numpy as np
import pytest

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import Observation
from perturbeu.measures.Perturbation import min_e_oeu
from perturbeu.measures.Robustness import average_perturbation
from perturbeu.measures.Robustness import drop_m_min_e
from perturbeu.measures.Robustness import robustness_row
from perturbeu.simulation import bronars_subject
from perturbeu.simulation import crra_subject
from perturbeu.simulation import random_budgets
from perturbeu.utils.errors import ValidationError


@pytest.fixture
def injected() -> Dataset:
    """EU-consistent choices plus one FOSD violation at index 3"""
    eu = crra_subject(random_budgets(3, 2, 5.0, seed=11), gamma=2.0)
    return Dataset(
        subject_id="injected",
        observations=eu.observations + (Observation([2.0, 1.0], [3.0, 1.0]),),
        belief=eu.belief,
    )


def test_drop_zero_is_identity(warp):
    e, dropped = drop_m_min_e(warp, 0)
    assert e == min_e_oeu(warp).e_star
    assert dropped == ()


def test_drop_injected_observation(injected):
    assert min_e_oeu(injected).e_star > 0.5

    e, dropped = drop_m_min_e(injected, 1)
    assert e <= 1e-6
    assert dropped == (3,)


def test_drop_too_many(warp):
    with pytest.raises(ValidationError):
        drop_m_min_e(warp, 2)
    with pytest.raises(ValidationError):
        drop_m_min_e(warp, -1)


def test_exhaustive_minimum():
    d = bronars_subject(random_budgets(6, 2, 5.0, seed=3), seed=4)
    e, dropped = drop_m_min_e(d, 2)

    values = [min_e_oeu(d.drop(c)).e_star for c in combinations(range(d.K), 2)]
    assert e == pytest.approx(min(values), abs=1e-9)
    assert min_e_oeu(d.drop(dropped)).e_star == pytest.approx(e, abs=1e-12)


def test_executor_matches_serial():
    d = bronars_subject(random_budgets(6, 2, 5.0, seed=5), seed=6)
    with ThreadPoolExecutor(max_workers=2) as executor:
        assert drop_m_min_e(d, 2, executor=executor) == drop_m_min_e(d, 2)


def test_average_perturbation(single_obs, rational):
    assert average_perturbation(single_obs) == pytest.approx(math.log(2) / 2, abs=1e-9)
    assert average_perturbation(rational) == pytest.approx(0.0, abs=1e-9)


def test_robustness_row(warp):
    row = robustness_row(warp, drops=(1, 2))

    assert row.e_full == pytest.approx(min_e_oeu(warp).e_star)
    assert row.e_drop1 == pytest.approx(0.0, abs=1e-9)
    assert row.e_drop2 is None

    payload = row.to_dict()
    assert list(payload) == ["e_full", "e_drop1", "dropped1", "e_drop2", "dropped2", "e_bar"]
    assert payload["dropped2"] is None
    assert payload["dropped1"] in ("0", "1")


@given(seed=st.integers(0, 2**32 - 1), K=st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_dropping_never_increases_e_star(seed, K):
    budget_seed, choice_seed = np.random.SeedSequence(seed).spawn(2)
    d = bronars_subject(random_budgets(K, 2, 5.0, budget_seed), choice_seed)

    e_full = min_e_oeu(d).e_star
    e_drop1, _ = drop_m_min_e(d, 1)
    assert e_drop1 <= e_full + 1e-9
