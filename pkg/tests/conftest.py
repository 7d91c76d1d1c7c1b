from pathlib import Path

import pytest

from perturbeu.data.Dataset import Dataset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def single_obs() -> Dataset:
    """More of the expensive state: rho ratio 2 under a uniform belief"""
    return Dataset.from_arrays([[2.0, 1.0]], [[3.0, 1.0]], subject_id="single")


@pytest.fixture
def warp() -> Dataset:
    """Two observations that violate WARP"""
    return Dataset.from_arrays(
        [[1.0, 1.0], [0.5, 1.75]], [[3.0, 1.0], [1.0, 2.0]], subject_id="warp"
    )


@pytest.fixture
def rational() -> Dataset:
    """Two mirrored choices consistent with objective EU"""
    return Dataset.from_arrays(
        [[2.0, 1.0], [1.0, 2.0]], [[1.0, 2.0], [2.0, 1.0]], subject_id="rational"
    )
