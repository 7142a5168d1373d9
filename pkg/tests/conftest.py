"""Shared helpers for sampling targets and states in the theory's regimes."""

import math

import numpy as np
import pytest

from lowrank_gd import FactorState, in_region_r, make_diagonal_target


def random_orthogonal(rng, n):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q


def random_psd_target(rng, d, r, equal_top=False):
    """Random diagonal PSD target with a safely positive eigengap."""
    vals = np.sort(rng.uniform(0.2, 5.0, d))[::-1]
    if vals[r - 1] - vals[r] < 0.05:
        vals[r:] *= 0.5
        vals = np.sort(vals)[::-1]
    if equal_top:
        vals[:r] = vals[0]
    return make_diagonal_target(vals, d, r)


def sample_state_in_region(rng, target):
    """Rejection sampling of factor states inside the absorbing region."""
    d, r = target.dim, target.rank
    lam1, lamr, gap = target.lambda_top, target.lambda_r, target.gap
    while True:
        su = np.sqrt(rng.uniform(gap / 4 * 1.02, min(2 * lam1, lamr) * 0.7, size=r))
        u = (random_orthogonal(rng, r) * su) @ random_orthogonal(rng, r)
        j = rng.normal(size=(d - r, r))
        j *= math.sqrt(rng.uniform(0.0, (lamr - gap / 2) * 0.8)) / np.linalg.norm(j, 2)
        state = FactorState(np.vstack([u, j]))
        if in_region_r(state, target, 0.0):
            return state


def scaled_random_state(rng, d, r, sigma1_cap):
    """Random d x r factor rescaled so sigma_1 is a uniform fraction of the cap."""
    x = rng.normal(size=(d, r))
    s1 = np.linalg.norm(x, 2)
    return x * (rng.uniform(0.05, 1.0) * sigma1_cap / s1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
