import numpy as np
import pytest

from symcp import (ActionConvention, GroupSpec, SyntheticConfig,
                   equivariantize, generate)
from symcp.groups import PIVOT_ORIGIN
from symcp.predictors import PoseBiasedVelocity
from symcp.scores import MODE_PLAIN, MODE_SYMMETRIZED, score_arrays
from symcp.validation import as_batches


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_past(rng, t_obs=8, scale=3.0):
    return rng.normal(0.0, scale, (t_obs, 2))


def random_future(rng, t_pred=12, scale=3.0):
    return rng.normal(0.0, scale, (t_pred, 2))


@pytest.fixture
def conv():
    return ActionConvention()


@pytest.fixture
def origin_conv():
    return ActionConvention(pivot=PIVOT_ORIGIN)


@pytest.fixture(scope="session")
def rr_pipeline():
    """Shared random-rotation pipeline: pose-biased base, c8 averaging."""
    samples, _ = generate(SyntheticConfig(n_samples=1200, seed=77))
    past, future = as_batches(samples)
    base = PoseBiasedVelocity(horizon=12, bias=(0.5, 0.0))
    eq = equivariantize(base, GroupSpec.cyclic(8), ActionConvention())
    return {
        "samples": samples,
        "past": past,
        "future": future,
        "base": base,
        "eq": eq,
        "plain": score_arrays("l2", base, past, future, MODE_PLAIN).values,
        "sym": score_arrays("l2", eq, past, future, MODE_SYMMETRIZED).values,
        "eqv": score_arrays("l2", eq, past, future, MODE_PLAIN).values,
    }


@pytest.fixture(scope="session")
def orbit_pipeline():
    """Shared orbit-augmented pipeline (c8 orbits, pose-biased base)."""
    samples, orbit_index = generate(
        SyntheticConfig(n_samples=150, invariance="orbit:8", seed=78))
    past, future = as_batches(samples)
    base = PoseBiasedVelocity(horizon=12, bias=(0.5, 0.0))
    eq = equivariantize(base, GroupSpec.cyclic(8), ActionConvention())
    return {
        "samples": samples,
        "orbit_index": orbit_index,
        "past": past,
        "future": future,
        "base": base,
        "eq": eq,
        "plain": score_arrays("l2", base, past, future, MODE_PLAIN).values,
        "sym": score_arrays("l2", eq, past, future, MODE_SYMMETRIZED).values,
        "eqv": score_arrays("l2", eq, past, future, MODE_PLAIN).values,
    }
