import numpy as np
import pytest

from nkdelib import BeliefStructure, NKLandscape


def constant_k0_landscape(n: int, zero_value: float, one_value: float) -> NKLandscape:
    """k=0 landscape whose every component contributes zero_value/one_value."""
    tables = np.tile(np.array([zero_value, one_value]), (n, 1))
    return NKLandscape(n=n, k=0, neighbor_map=tuple(() for _ in range(n)), contribution_tables=tables)


def flat_landscape(n: int, value: float) -> NKLandscape:
    """k=0 landscape that assigns `value` to every configuration."""
    return constant_k0_landscape(n, value, value)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
