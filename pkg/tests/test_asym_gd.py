import math

import numpy as np
import pytest

from conftest import random_orthogonal
from lowrank_gd import (
    AsymState,
    FactorState,
    SolverConfig,
    asym_error,
    asym_step,
    balance_gap,
    gd_step,
    lift,
    pad_square,
    run_asym,
)


def dense_step_oracle(x, y, sigma, eta, regularized):
    """The update written exactly as the gradients read, via the dense residual."""
    residual = sigma - x @ y.T
    x_next = x + eta * residual @ y
    y_next = y + eta * residual.T @ x
    if regularized:
        imbalance = x.T @ x - y.T @ y
        x_next = x_next - 0.5 * eta * x @ imbalance
        y_next = y_next + 0.5 * eta * y @ imbalance
    return x_next, y_next


def test_balanced_minimum_is_fixed_point(rng):
    x = rng.normal(size=(4, 2))
    sigma = x @ x.T
    state = AsymState(x, x.copy())
    for reg in (True, False):
        nxt = asym_step(state, sigma, 0.1, regularized=reg)
        np.testing.assert_allclose(nxt.x, x, atol=1e-14)
        np.testing.assert_allclose(nxt.y, x, atol=1e-14)


def test_scalar_hand_example():
    state = AsymState(np.array([[1.0]]), np.array([[2.0]]))
    nxt = asym_step(state, np.array([[2.0]]), 0.1, regularized=True)
    assert nxt.x[0, 0] == pytest.approx(1.15)
    assert nxt.y[0, 0] == pytest.approx(1.7)
    unreg = asym_step(state, np.array([[2.0]]), 0.1, regularized=False)
    assert unreg.x[0, 0] == pytest.approx(1.0)
    assert unreg.y[0, 0] == pytest.approx(2.0)


def test_step_matches_dense_residual_oracle(rng):
    for _ in range(30):
        d1, d2, r = int(rng.integers(2, 7)), int(rng.integers(2, 7)), int(rng.integers(1, 3))
        sigma = rng.normal(size=(d1, d2))
        state = AsymState(rng.normal(size=(d1, r)), rng.normal(size=(d2, r)))
        eta = float(rng.uniform(0.01, 0.2))
        for reg in (True, False):
            nxt = asym_step(state, sigma, eta, regularized=reg)
            ox, oy = dense_step_oracle(state.x, state.y, sigma, eta, reg)
            assert np.max(np.abs(nxt.x - ox)) <= 1e-12
            assert np.max(np.abs(nxt.y - oy)) <= 1e-12


def test_step_dimension_mismatch():
    state = AsymState(np.zeros((3, 1)), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        asym_step(state, np.zeros((3, 3)), 0.1)


# --- lifting -----------------------------------------------------------------

def test_lift_balanced_and_antibalanced(rng):
    x = rng.normal(size=(3, 2))
    balanced = lift(AsymState(x, x.copy()))
    np.testing.assert_allclose(balanced.w[:3], math.sqrt(2.0) * x)
    np.testing.assert_allclose(balanced.w[3:], 0.0)
    anti = lift(AsymState(x, -x))
    np.testing.assert_allclose(anti.w[:3], 0.0)
    np.testing.assert_allclose(anti.w[3:], math.sqrt(2.0) * x)


def test_lift_requires_square():
    with pytest.raises(ValueError, match="square"):
        lift(AsymState(np.zeros((3, 1)), np.zeros((2, 1))))


def test_lift_commutes_with_step(rng):
    # the change of variables turns one regularized asymmetric step into one
    # symmetric step on diag(2 sigma, -2 sigma) with half the step size;
    # the identity needs a symmetric sigma
    for _ in range(50):
        d, r = int(rng.integers(2, 6)), int(rng.integers(1, 3))
        a = rng.normal(size=(d, d))
        sigma = 0.5 * (a + a.T)
        state = AsymState(rng.normal(size=(d, r)), rng.normal(size=(d, r)))
        eta = float(rng.uniform(0.01, 0.1))
        after = lift(asym_step(state, sigma, eta, regularized=True))
        before = lift(state, sigma)
        stepped = gd_step(FactorState(before.w), before.lifted_target, eta / 2.0)
        assert np.max(np.abs(after.w - stepped.x)) <= 1e-10


def test_pad_square_commutes_with_step(rng):
    for _ in range(10):
        d1, d2, r = 5, 3, 2
        sigma = rng.normal(size=(d1, d2))
        padded_sigma = np.zeros((d1, d1))
        padded_sigma[:, :d2] = sigma
        state = AsymState(rng.normal(size=(d1, r)), rng.normal(size=(d2, r)))
        eta = 0.05
        stepped = pad_square(asym_step(state, sigma, eta, regularized=True))
        padded_step = asym_step(pad_square(state), padded_sigma, eta, regularized=True)
        assert np.max(np.abs(stepped.x - padded_step.x)) <= 1e-12
        assert np.max(np.abs(stepped.y - padded_step.y)) <= 1e-12


# --- diagnostics ---------------------------------------------------------------

def test_balance_gap_values(rng):
    x = rng.normal(size=(4, 2))
    assert balance_gap(AsymState(x, x.copy())) == 0.0
    assert balance_gap(AsymState(np.array([[1.0]]), np.array([[2.0]]))) == pytest.approx(3.0)
    frame, _ = np.linalg.qr(rng.normal(size=(4, 2)))
    q = random_orthogonal(rng, 2)
    assert balance_gap(AsymState(frame, frame @ q)) == pytest.approx(0.0, abs=1e-12)


def test_balance_gap_rotation_invariance(rng):
    x = rng.normal(size=(4, 2))
    y = rng.normal(size=(5, 2))
    q = random_orthogonal(rng, 2)
    rotated = AsymState(x @ q, y @ q)
    assert balance_gap(rotated) == pytest.approx(balance_gap(AsymState(x, y)), rel=1e-12)


def test_asym_error_exact_cases(rng):
    sigma = np.diag([3.0, 1.0])
    state = AsymState(np.array([[math.sqrt(3.0)], [0.0]]), np.array([[math.sqrt(3.0)], [0.0]]))
    assert asym_error(state, sigma, 1) == pytest.approx(0.0, abs=1e-12)
    zero = AsymState(np.zeros((2, 1)), np.zeros((2, 1)))
    assert asym_error(zero, sigma, 1) == pytest.approx(3.0)


def test_asym_error_fast_path_matches_dense(rng):
    vals = np.sort(rng.uniform(0.1, 5.0, 7))[::-1]
    sigma = np.diag(vals)
    r = 3
    sigma_r = np.diag(np.concatenate([vals[:r], np.zeros(4)]))
    for _ in range(20):
        state = AsymState(rng.normal(size=(7, r)), rng.normal(size=(7, r)))
        dense = np.linalg.norm(sigma_r - state.x @ state.y.T, "fro")
        assert asym_error(state, sigma, r) == pytest.approx(dense, abs=1e-10)


def test_asym_error_general_matrix(rng):
    sigma = rng.normal(size=(5, 4))
    u, s, vt = np.linalg.svd(sigma, full_matrices=False)
    sigma_r = (u[:, :2] * s[:2]) @ vt[:2]
    state = AsymState(rng.normal(size=(5, 2)), rng.normal(size=(4, 2)))
    dense = np.linalg.norm(sigma_r - state.x @ state.y.T, "fro")
    assert asym_error(state, sigma, 2) == pytest.approx(dense, abs=1e-12)


# --- runs ----------------------------------------------------------------------

def test_run_from_balanced_minimum(rng):
    x = rng.normal(size=(4, 2))
    sigma = x @ x.T
    cfg = SolverConfig(eta=0.05, epsilon=1e-6, max_iters=100)
    trace = run_asym(AsymState(x, x.copy()), sigma, cfg, regularized=True)
    assert trace.converged and trace.iterations == 0


def test_run_matches_repeated_steps(rng):
    sigma = np.diag([3.0, 2.0, 1.0, 0.5])
    state = AsymState(0.1 * rng.normal(size=(4, 2)), 0.1 * rng.normal(size=(4, 2)))
    cfg = SolverConfig(eta=0.05, epsilon=1e-14, max_iters=40)
    trace = run_asym(state, sigma, cfg, regularized=True)
    manual = state
    for _ in range(40):
        manual = asym_step(manual, sigma, 0.05, regularized=True)
    np.testing.assert_array_equal(trace.final_state.x, manual.x)
    np.testing.assert_array_equal(trace.final_state.y, manual.y)


def test_regularized_run_balances_at_termination(rng):
    sigma = np.diag([3.0, 2.0, 1.0, 0.5, 0.2])
    state = AsymState(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))
    cfg = SolverConfig(eta=0.05, epsilon=1e-5, max_iters=50000)
    trace = run_asym(state, sigma, cfg, regularized=True)
    assert trace.converged
    assert trace.final_balance <= 1e-5
    assert balance_gap(trace.final_state) <= 1e-5


def test_unregularized_run_stops_on_error_alone(rng):
    sigma = np.diag([3.0, 2.0, 1.0, 0.5, 0.2])
    state = AsymState(rng.normal(size=(5, 2)), 2.0 * rng.normal(size=(5, 2)))
    cfg = SolverConfig(eta=0.05, epsilon=1e-5, max_iters=50000)
    trace = run_asym(state, sigma, cfg, regularized=False)
    assert trace.converged
    assert trace.final_error <= 1e-5
