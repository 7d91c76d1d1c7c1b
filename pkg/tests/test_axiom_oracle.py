from collections import Counter
from fractions import Fraction
import itertools
import math

import numpy as np
import pytest

from perturbeu.data.Dataset import Dataset
from perturbeu.measures.Oracle import AxiomWitness
from perturbeu.measures.Oracle import TestSequence
from perturbeu.measures.Oracle import check_psaroeu
from perturbeu.measures.Oracle import check_psarseu
from perturbeu.measures.Oracle import check_saroeu
from perturbeu.measures.Oracle import enumerate_test_sequences
from perturbeu.measures.Oracle import oracle_min_e
from perturbeu.measures.Oracle import sequence_stats
from perturbeu.measures.Oracle import subjective_exponent
from perturbeu.measures.Oracle.AxiomOracle import default_max_len
from perturbeu.simulation import bronars_subject
from perturbeu.simulation import crra_subject
from perturbeu.simulation import random_budgets
from perturbeu.utils.errors import InvalidSequenceError


def test_single_pair_stats(single_obs):
    stats = sequence_stats(TestSequence([((0, 0), (0, 1))]), single_obs)
    assert stats.d == {(0, 0): 1, (0, 1): -1}
    assert stats.m == 1


def test_cross_pairs_do_not_cancel():
    d = Dataset.from_arrays([[1, 1], [1, 1]], [[3, 1], [3, 1]])
    stats = sequence_stats(TestSequence([((0, 0), (1, 1)), ((1, 0), (0, 1))]), d)
    assert stats.d == {(0, 0): 1, (0, 1): -1, (1, 0): 1, (1, 1): -1}
    assert stats.m == 2


def test_left_right_occurrences_cancel():
    d = Dataset.from_arrays([[1, 1], [1, 1]], [[3, 1], [2, 2]])
    stats = sequence_stats(TestSequence([((0, 0), (1, 0)), ((1, 0), (0, 1))]), d)
    assert (1, 0) not in stats.d
    assert stats.m == 1


def test_unordered_pair_is_invalid(single_obs):
    with pytest.raises(InvalidSequenceError, match="not larger"):
        sequence_stats(TestSequence([((0, 1), (0, 0))]), single_obs)


def test_unbalanced_observations_are_invalid():
    d = Dataset.from_arrays([[1, 1], [1, 1]], [[3, 1], [2, 2]])
    with pytest.raises(InvalidSequenceError, match="unequally"):
        sequence_stats(TestSequence([((0, 0), (1, 0))]), d)


def test_enumeration_without_strict_pairs():
    d = Dataset.from_arrays([[1, 1]], [[2, 2]])
    assert list(enumerate_test_sequences(d, 4)) == []


def test_enumeration_single_pair(single_obs):
    assert list(enumerate_test_sequences(single_obs, 1)) == [
        TestSequence([((0, 0), (0, 1))])
    ]


def test_enumeration_counts_repetitions(single_obs):
    assert [len(s) for s in enumerate_test_sequences(single_obs, 3)] == [1, 2, 3]


def test_state_balance_impossible_in_one_observation(single_obs):
    assert list(enumerate_test_sequences(single_obs, 6, balanced_states=True)) == []


def test_enumerated_sequences_are_valid(warp):
    for sigma in enumerate_test_sequences(warp, 4):
        sequence_stats(sigma, warp)


def test_psaroeu_passes_at_e_star(single_obs):
    assert check_psaroeu(single_obs, 1.0) is True


def test_psaroeu_witness(single_obs):
    witness = check_psaroeu(single_obs, 0.5)
    assert isinstance(witness, AxiomWitness)
    assert witness.lhs == pytest.approx(2.0)
    assert witness.bound == pytest.approx(1.5)
    assert witness.to_dict()["pairs"] == [[0, 0, 0, 1]]


def test_psarseu_single_observation(single_obs):
    assert check_psarseu(single_obs, 0.0) is True


def test_psarseu_equal_prices():
    d = Dataset.from_arrays([[1, 1], [1, 1]], [[3, 1], [1, 3]])
    assert check_psarseu(d, 0.0) is True


def test_psarseu_witness():
    d = Dataset.from_arrays([[1, 1], [1, 4]], [[3, 1], [2, 2]])
    witness = check_psarseu(d, 0.0)
    assert isinstance(witness, AxiomWitness)
    assert witness.lhs > witness.bound


def test_saroeu(rational, single_obs):
    assert check_saroeu(rational)
    assert not check_saroeu(single_obs)


def test_oracle_min_e(single_obs):
    assert oracle_min_e(Dataset.from_arrays([[1, 2]], [[2, 2]])) == 0.0
    assert oracle_min_e(single_obs, "OEU") == pytest.approx(1.0)
    assert oracle_min_e(single_obs, "SEU") == 0.0


def test_oracle_min_e_seu_two_observations():
    d = Dataset.from_arrays([[1, 1], [1, 4]], [[3, 1], [2, 2]])
    e = oracle_min_e(d, "SEU")
    assert e == pytest.approx(3.0, abs=1e-12)
    assert check_psarseu(d, e + 1e-9) is True


def test_psarseu_crossing_pairs_use_one_factor():
    # (x[0][0], x[1][0]), (x[1][1], x[0][1]) has m = 2 but one belief factor
    d = Dataset.from_arrays([[1, 1], [1, 4]], [[3, 1], [2, 2]])
    witness = check_psarseu(d, 2.0)
    assert isinstance(witness, AxiomWitness)
    assert witness.lhs == pytest.approx(4.0)
    assert witness.exponent == 1.0
    assert witness.bound == pytest.approx(3.0)
    assert check_psarseu(d, 3.0) is True


def test_subjective_exponent_two_states():
    net = {(0, 0): 1, (0, 1): -1, (1, 0): -1, (1, 1): 1}
    assert subjective_exponent(net, 2, 2) == 1
    assert subjective_exponent({(0, 0): 2, (0, 1): -2, (1, 0): -2, (1, 1): 2}, 2, 2) == 2


def test_subjective_exponent_three_cycle():
    # no single factor matches two entries of the cycle, so 3 / 2 is not reached
    net = {
        (0, 0): 1, (0, 1): -1,
        (1, 1): 1, (1, 2): -1,
        (2, 2): 1, (2, 0): -1,
    }
    assert subjective_exponent(net, 3, 3) == Fraction(2)


def test_subjective_exponent_single_factor_three_states():
    net = {(0, 0): 1, (0, 2): -1, (2, 0): -1, (2, 2): 1}
    assert subjective_exponent(net, 3, 3) == 1
    assert subjective_exponent({}, 3, 3) == 0


def test_subjective_exponent_rejects_unbalanced():
    with pytest.raises(InvalidSequenceError):
        subjective_exponent({(0, 0): 1, (1, 0): -1}, 2, 2)


@pytest.mark.parametrize("seed", range(40))
def test_subjective_exponent_between_half_m_and_m(seed):
    rng = np.random.default_rng(seed)
    K, S = 3, 3
    # random sum of factors
    net: Counter = Counter()
    n_factors = int(rng.integers(1, 4))
    for _ in range(n_factors):
        k, l = rng.choice(K, 2, replace=False)
        s, t = rng.choice(S, 2, replace=False)
        net[(k, s)] += 1
        net[(k, t)] -= 1
        net[(l, s)] -= 1
        net[(l, t)] += 1
    net = {(int(k), int(s)): c for (k, s), c in net.items() if c}
    m = sum(c for c in net.values() if c > 0)
    c = subjective_exponent(net, K, S)
    assert Fraction(m, 2) <= c <= min(m, n_factors)


def test_unknown_axiom(single_obs):
    with pytest.raises(ValueError):
        oracle_min_e(single_obs, "RDU")


def test_default_max_len_cap():
    small = Dataset.from_arrays([[1, 1], [1, 2]], [[1, 2], [2, 1]])
    assert default_max_len(small) == 4

    big = Dataset.from_arrays([[1, 1, 1]] * 3, [[1, 2, 3]] * 3)
    with pytest.warns(UserWarning, match="capped"):
        assert default_max_len(big) == 12


def test_equal_prices_never_violate():
    d = Dataset.from_arrays([[1, 1], [1, 1]], [[3, 1], [2, 2]], subject_id="net")
    witness = check_psaroeu(d, 0.0, max_len=2)
    assert witness is True
    assert math.isclose(oracle_min_e(d, "OEU", max_len=2), 0.0, abs_tol=1e-12)


def exact_rho(d: Dataset):
    return [
        [Fraction(float(p)) / Fraction(float(mu)) for p, mu in zip(row, d.mu)]
        for row in d.prices
    ]


def small_subject(seed: int) -> Dataset:
    """K <= 3 two-state subject, CRRA maximiser on odd seeds"""
    K = 1 + seed % 3
    budget_seed, choice_seed = np.random.SeedSequence(seed).spawn(2)
    b = random_budgets(K, 2, 5.0, budget_seed)
    if seed % 2:
        return crra_subject(b, 0.5 + seed % 5)
    return bronars_subject(b, choice_seed)


def direct_saroeu(d: Dataset, max_len: int) -> bool:
    """Every observation balanced multiset of strict pairs has ratio product <= 1"""
    x = d.quantities
    rho = exact_rho(d)
    entries = list(itertools.product(range(d.K), range(d.S)))
    pairs = [(a, b) for a in entries for b in entries if x[a] > x[b]]

    for n in range(1, max_len + 1):
        for chosen in itertools.combinations_with_replacement(pairs, n):
            balance: Counter = Counter()
            for a, b in chosen:
                balance[a[0]] += 1
                balance[b[0]] -= 1
            if any(balance.values()):
                continue
            product = Fraction(1)
            for (k, s), (l, t) in chosen:
                product *= rho[k][s] / rho[l][t]
            if product > 1:
                return False
    return True


@pytest.mark.parametrize("seed", range(100))
def test_zero_perturbation_is_saroeu(seed):
    d = small_subject(seed)
    expected = direct_saroeu(d, 4)
    assert (check_psaroeu(d, 0.0, max_len=4) is True) == expected
    assert check_saroeu(d, max_len=4) == expected


@pytest.mark.parametrize("seed", range(10))
def test_ratio_product_cancels_exactly(seed):
    d = small_subject(2 * seed)
    rho = exact_rho(d)
    for sigma in enumerate_test_sequences(d, 4):
        product = Fraction(1)
        for (k, s), (l, t) in sigma:
            product *= rho[k][s] / rho[l][t]

        net = sequence_stats(sigma, d).d
        reduced = Fraction(1)
        for (k, s), c in net.items():
            reduced *= rho[k][s] ** c

        assert product == reduced
        if not net:
            assert product == 1


@pytest.mark.parametrize("seed", range(10))
def test_oracle_scale_invariance(seed):
    d = small_subject(2 * seed)
    scale = np.exp(np.random.default_rng(seed).uniform(-2.0, 2.0, size=d.K))
    scaled = d.with_prices(d.prices * scale[:, None])
    for axiom in ("OEU", "SEU"):
        assert abs(oracle_min_e(scaled, axiom) - oracle_min_e(d, axiom)) <= 1e-9
