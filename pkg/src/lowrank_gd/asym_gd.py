"""Gradient descent for asymmetric low-rank approximation.

The regularized iteration keeps the two factors' Gram matrices balanced;
the unregularized ablation drops that term. A change of variables stacks
the factor sum and difference into one tall factor driven by the
symmetric update on a block-diagonal matrix, which serves both as a
per-step correctness oracle and as the bridge to the symmetric theory.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import linalg
from .sym_gd import DIVERGENCE_LIMIT, DivergenceError


@dataclass
class AsymState:
    """Factor pair (X, Y) with X of shape d1 x r and Y of shape d2 x r."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = linalg.as_matrix(self.x, "x factor")
        self.y = linalg.as_matrix(self.y, "y factor")
        if self.x.shape[1] != self.y.shape[1]:
            raise ValueError(
                f"factors disagree on rank: {self.x.shape[1]} vs {self.y.shape[1]}"
            )

    @property
    def rank(self) -> int:
        return self.x.shape[1]


@dataclass
class LiftedState:
    """Stacked factor w = [(X+Y)/sqrt2 ; (X-Y)/sqrt2] and the block-diagonal
    matrix diag(2 Sigma, -2 Sigma) driving its symmetric update."""

    w: np.ndarray
    lifted_target: np.ndarray


@dataclass
class AsymRecord:
    iter: int
    error: float
    balance: float


@dataclass
class AsymTrace:
    records: list
    converged: bool
    iterations: int
    final_error: float
    final_balance: float
    wall_time: float
    final_state: AsymState

    def errors(self) -> np.ndarray:
        return np.array([rec.error for rec in self.records])

    def iterations_to(self, tol: float):
        """First recorded iteration whose error is <= tol, or None."""
        for rec in self.records:
            if rec.error <= tol:
                return rec.iter
        return None


def _check_dims(state: AsymState, sigma: np.ndarray):
    if sigma.shape != (state.x.shape[0], state.y.shape[0]):
        raise ValueError(
            f"sigma of shape {sigma.shape} does not match factors "
            f"{state.x.shape[0]}x{state.y.shape[0]}"
        )


def _is_descending_nonneg_diag(sigma: np.ndarray) -> bool:
    if sigma.shape[0] != sigma.shape[1]:
        return False
    d = np.diag(sigma)
    if np.any(d < 0) or np.any(np.diff(d) > 0):
        return False
    return not np.any(sigma - np.diag(d))


def _products(sigma: np.ndarray):
    """(sigma @ v, sigma.T @ v) closures with a diagonal fast path."""
    if _is_descending_nonneg_diag(sigma):
        dvec = np.diag(sigma).copy()
        return (lambda v: dvec[:, None] * v), (lambda v: dvec[:, None] * v)
    return (lambda v: sigma @ v), (lambda v: sigma.T @ v)


def asym_step(state: AsymState, sigma, eta: float, regularized: bool = True) -> AsymState:
    """One gradient step on the (optionally regularized) asymmetric objective.

    Regularized:
        X' = X + eta (Sigma - X Y^T) Y - (eta/2) X (X^T X - Y^T Y)
        Y' = Y + eta (Sigma - X Y^T)^T X + (eta/2) Y (X^T X - Y^T Y)
    The unregularized variant drops the (eta/2) terms.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    _check_dims(state, sigma)
    sig, sig_t = _products(sigma)
    x, y = state.x, state.y
    gram_x = x.T @ x
    gram_y = y.T @ y
    x_next = x + eta * (sig(y) - x @ gram_y)
    y_next = y + eta * (sig_t(x) - y @ gram_x)
    if regularized:
        imbalance = gram_x - gram_y
        x_next = x_next - 0.5 * eta * (x @ imbalance)
        y_next = y_next + 0.5 * eta * (y @ imbalance)
    return AsymState(x_next, y_next)


def lift(state: AsymState, sigma=None) -> LiftedState:
    """Stack the factors into the symmetric side of the change of variables.

    Defined for square problems (d1 == d2); zero-pad rectangular factors
    with ``pad_square`` first. When ``sigma`` is given, the block-diagonal
    driver diag(2 Sigma, -2 Sigma) is attached.
    """
    d1, d2 = state.x.shape[0], state.y.shape[0]
    if d1 != d2:
        raise ValueError(f"lifting needs square factors, got d1={d1}, d2={d2}")
    s = 1.0 / math.sqrt(2.0)
    w = np.vstack([(state.x + state.y) * s, (state.x - state.y) * s])
    lifted = None
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=np.float64)
        _check_dims(state, sigma)
        lifted = np.zeros((2 * d1, 2 * d1))
        lifted[:d1, :d1] = 2.0 * sigma
        lifted[d1:, d1:] = -2.0 * sigma
    return LiftedState(w=w, lifted_target=lifted)


def pad_square(state: AsymState) -> AsymState:
    """Zero-pad the shorter factor so both live in max(d1, d2) rows."""
    d = max(state.x.shape[0], state.y.shape[0])
    r = state.rank
    x = np.zeros((d, r))
    y = np.zeros((d, r))
    x[: state.x.shape[0]] = state.x
    y[: state.y.shape[0]] = state.y
    return AsymState(x, y)


def balance_gap(state: AsymState) -> float:
    """Frobenius norm of X^T X - Y^T Y; zero iff the Gram matrices agree."""
    return float(np.linalg.norm(state.x.T @ state.x - state.y.T @ state.y, "fro"))


def _error_fn(sigma: np.ndarray, r: int):
    """Closure for ||Sigma_r - X Y^T||_F with Sigma_r the rank-r SVD
    truncation. Diagonal descending targets use a block identity that
    avoids forming d1 x d2 matrices per call."""
    if r < 1 or r > min(sigma.shape):
        raise ValueError(f"rank {r} out of range for sigma of shape {sigma.shape}")
    if _is_descending_nonneg_diag(sigma):
        s_r = np.diag(np.diag(sigma)[:r])

        def err(x: np.ndarray, y: np.ndarray) -> float:
            ux, jx = x[:r], x[r:]
            uy, jy = y[:r], y[r:]
            top = s_r - ux @ uy.T
            sq = (
                float(np.sum(top * top))
                + float(np.sum((ux.T @ ux) * (jy.T @ jy)))
                + float(np.sum((jx.T @ jx) * (uy.T @ uy)))
                + float(np.sum((jx.T @ jx) * (jy.T @ jy)))
            )
            return math.sqrt(max(sq, 0.0))

        return err

    left, svals, right = linalg.svd(sigma)
    sigma_r = (left[:, :r] * svals[:r]) @ right[:, :r].T

    def err(x: np.ndarray, y: np.ndarray) -> float:
        return float(np.linalg.norm(sigma_r - x @ y.T, "fro"))

    return err


def asym_error(state: AsymState, sigma, r: int) -> float:
    """Frobenius error of X Y^T against the rank-r truncation of sigma."""
    sigma = np.asarray(sigma, dtype=np.float64)
    _check_dims(state, sigma)
    return _error_fn(sigma, r)(state.x, state.y)


def run_asym(state0: AsymState, sigma, config, regularized: bool = True) -> AsymTrace:
    """Iterate the asymmetric update until the approximation error (and,
    for the regularized variant, the balance gap) falls below the
    tolerance, or the budget runs out.

    Records (iteration, error, balance) at the configured cadence plus the
    first and last iterations. Raises DivergenceError, carrying the trace
    so far, if either factor norm hits the divergence guard.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    _check_dims(state0, sigma)
    err_fn = _error_fn(sigma, state0.rank)
    sig, sig_t = _products(sigma)

    records = []
    x, y = state0.x.copy(), state0.y.copy()
    eta = config.eta
    converged = False
    t = 0
    start = time.perf_counter()
    while True:
        norm = max(float(np.linalg.norm(x)), float(np.linalg.norm(y)))
        diverged = norm >= DIVERGENCE_LIMIT
        err = err_fn(x, y)
        gram_x = x.T @ x
        gram_y = y.T @ y
        imbalance = gram_x - gram_y
        balance = float(np.linalg.norm(imbalance, "fro"))
        done = err <= config.epsilon and (not regularized or balance <= config.epsilon)
        terminal = diverged or done or t >= config.max_iters
        if t % config.record_every == 0 or terminal:
            records.append(AsymRecord(t, err, balance))
        if diverged:
            wall = time.perf_counter() - start
            trace = AsymTrace(records, False, t, err, balance, wall, AsymState(x, y))
            raise DivergenceError(
                f"factor norm {norm:.3e} reached the divergence guard at iteration {t}", trace
            )
        if done:
            converged = True
            break
        if t >= config.max_iters:
            break
        x_next = x + eta * (sig(y) - x @ gram_y)
        y_next = y + eta * (sig_t(x) - y @ gram_x)
        if regularized:
            x_next -= 0.5 * eta * (x @ imbalance)
            y_next += 0.5 * eta * (y @ imbalance)
        x, y = x_next, y_next
        t += 1
    wall = time.perf_counter() - start
    return AsymTrace(records, converged, t, err, balance, wall, AsymState(x, y))
