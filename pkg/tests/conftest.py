import numpy as np
import pytest

from models import Dataset, PriorLabel, VariableRole
from priors import prior_from_counts


def make_dataset(n_markers: int, n_traits: int, n: int, seed: int) -> Dataset:
    """Bernoulli markers, each trait driven by one marker and odd traits by their predecessor"""
    rng = np.random.default_rng(seed)
    markers = rng.binomial(1, 0.4, size=(n, n_markers)).astype(float)
    traits = np.zeros((n, n_traits))
    for i in range(n_traits):
        traits[:, i] = markers[:, i % n_markers] + rng.standard_normal(n)
        if i % 2 == 1:
            traits[:, i] += 0.8 * traits[:, i - 1]
    return Dataset(
        values=np.hstack([markers, traits]),
        roles=(VariableRole.MARKER,) * n_markers + (VariableRole.TRAIT,) * n_traits,
        names=tuple(f"L{k + 1}" for k in range(n_markers)) + tuple(f"T{i + 1}" for i in range(n_traits)),
    )


@pytest.fixture
def dataset_factory():
    return make_dataset


@pytest.fixture
def small_dataset() -> Dataset:
    return make_dataset(n_markers=5, n_traits=8, n=300, seed=11)


@pytest.fixture
def dmag_bk():
    return prior_from_counts(PriorLabel.DMAG_BK)
