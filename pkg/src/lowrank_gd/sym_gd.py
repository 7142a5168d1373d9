"""Gradient descent for symmetric low-rank approximation.

Implements the factored update X <- X + eta * (Sigma - X X^T) X together
with the block-level diagnostics used to machine-check its convergence
behaviour: membership in the absorbing regions, the noise-to-signal
ratio, the signal residual, and closed-form iteration budgets.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import linalg
from .spectrum import Target

# Iterates whose Frobenius norm reaches this are treated as diverged. The
# solver fails loudly instead of overflowing when users pass step sizes
# far above the theoretical bound.
DIVERGENCE_LIMIT = 1e12

# Additive slack absorbing floating-point drift in region membership.
DEFAULT_REGION_SLACK = 1e-8

# Signal levels below this are reported as an infinite ratio.
SIGNAL_FLOOR = 1e-300


class DivergenceError(RuntimeError):
    """An iterate exceeded the divergence guard. Carries the trace so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class FactorState:
    """A d x r iterate of the factored problem."""

    x: np.ndarray

    def __post_init__(self):
        self.x = linalg.as_matrix(self.x, "factor")

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @property
    def rank(self) -> int:
        return self.x.shape[1]


@dataclass
class SolverConfig:
    eta: float
    epsilon: float
    max_iters: int
    record_every: int = 1

    def __post_init__(self):
        if not (0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class TraceRecord:
    """Per-iteration diagnostics of a symmetric run."""

    iter: int
    error: float
    sigma1_x: float
    sigma1_j: float
    sigmar_u: float
    ratio: float
    sigma1_p: float
    in_r: bool
    in_r2: bool


@dataclass
class Trace:
    """Recorded history of a run plus its outcome."""

    records: list
    converged: bool
    iterations: int
    final_error: float
    wall_time: float
    final_state: FactorState

    def errors(self) -> np.ndarray:
        return np.array([rec.error for rec in self.records])

    def iters(self) -> np.ndarray:
        return np.array([rec.iter for rec in self.records])

    def iterations_to(self, tol: float):
        """First recorded iteration whose error is <= tol, or None."""
        for rec in self.records:
            if rec.error <= tol:
                return rec.iter
        return None


def _sigma_product(target, x: np.ndarray) -> np.ndarray:
    """Sigma @ x, with a cheap path for diagonal targets.

    ``target`` may be a Target or a plain symmetric matrix; the latter is
    what the lifting oracles pass in.
    """
    if isinstance(target, Target):
        if target.dim != x.shape[0]:
            raise ValueError(f"target is {target.dim}-dimensional but factor has {x.shape[0]} rows")
        if target.basis is None:
            return target.eigenvalues[:, None] * x
        return target.matrix @ x
    sigma = np.asarray(target, dtype=np.float64)
    if sigma.shape[0] != sigma.shape[1] or sigma.shape[0] != x.shape[0]:
        raise ValueError(f"sigma of shape {sigma.shape} does not match factor with {x.shape[0]} rows")
    return sigma @ x


def gd_step(state: FactorState, target, eta: float) -> FactorState:
    """One gradient step X + eta * (Sigma - X X^T) X."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    x = state.x
    sx = _sigma_product(target, x)
    return FactorState(x + eta * (sx - x @ (x.T @ x)))


def split_blocks(state: FactorState):
    """Split the iterate into the signal block (top r rows) and the noise
    block (remaining d - r rows)."""
    if state.dim <= state.rank:
        raise ValueError(f"block split needs d > r, got d={state.dim}, r={state.rank}")
    r = state.rank
    return state.x[:r], state.x[r:]


def region_quantities(state: FactorState):
    """(sigma_1^2(X), sigma_1^2(J), sigma_r^2(U)) for the block views."""
    u, j = split_blocks(state)
    s1x = linalg.singular_values(state.x)[0]
    s1j = linalg.singular_values(j)[0]
    sru = linalg.singular_values(u)[-1]
    return s1x * s1x, s1j * s1j, sru * sru


def in_region_r(state: FactorState, target: Target, slack: float = DEFAULT_REGION_SLACK) -> bool:
    """Membership in the absorbing region: bounded magnitude, controlled
    noise, and a signal floor, each with additive slack."""
    s1x2, s1j2, sru2 = region_quantities(state)
    return (
        s1x2 <= 2.0 * target.lambda_top + slack
        and s1j2 <= target.lambda_r - target.gap / 2.0 + slack
        and sru2 >= target.gap / 4.0 - slack
    )


def in_region_r2(state: FactorState, target: Target, slack: float = DEFAULT_REGION_SLACK) -> bool:
    """Membership in the larger absorbing region without the signal floor."""
    s1x2, s1j2, _ = region_quantities(state)
    return (
        s1x2 <= 2.0 * target.lambda_top + slack
        and s1j2 <= target.lambda_r - target.gap / 2.0 + slack
    )


def max_step_size(target: Target) -> float:
    """Largest step size covered by the local convergence guarantee."""
    if target.lambda_top <= 0:
        raise ValueError("step size bound needs a positive top eigenvalue")
    return target.gap ** 2 / (36.0 * target.lambda_top ** 3)


def noise_signal_ratio(state: FactorState) -> float:
    """sigma_1^2(J) / sigma_r^2(U); inf when the signal block is singular."""
    u, j = split_blocks(state)
    s1j = linalg.singular_values(j)[0]
    sru = linalg.singular_values(u)[-1]
    if sru <= SIGNAL_FLOOR:
        return math.inf
    return (s1j * s1j) / (sru * sru)


def signal_residual(state: FactorState, target: Target) -> float:
    """sigma_1 of the signal residual Lambda_r - U U^T."""
    u, _ = split_blocks(state)
    p = np.diag(target.leading) - u @ u.T
    return float(linalg.singular_values(p)[0])


def local_iteration_budget(target: Target, eta: float, epsilon: float) -> int:
    """Iterations guaranteed to reach the given error from inside the
    absorbing region, with the analysis' printed constants."""
    if eta <= 0 or epsilon <= 0:
        raise ValueError("eta and epsilon must be positive")
    lam1, gap, r = target.lambda_top, target.gap, target.rank
    arg = 200.0 * r * lam1 ** 2 / (eta * gap ** 2 * epsilon)
    return max(0, math.ceil((6.0 / (eta * gap)) * math.log(arg)))


def approximation_error(state: FactorState, target: Target) -> float:
    """Frobenius error against the best rank-r approximation of the target."""
    return _error_fn(target)(state.x)


def _error_fn(target: Target):
    """Closure evaluating ||Sigma_r - X X^T||_F without forming d x d
    matrices: in eigenbasis coordinates the difference is block-structured
    and each block has a small Gram representation."""
    r = target.rank
    lam_r = np.diag(target.leading)
    basis = target.basis

    def err(x: np.ndarray) -> float:
        z = x if basis is None else basis.T @ x
        u, j = z[:r], z[r:]
        top = lam_r - u @ u.T
        gram_u = u.T @ u
        gram_j = j.T @ j
        sq = float(np.sum(top * top) + 2.0 * np.sum(gram_u * gram_j) + np.sum(gram_j * gram_j))
        return math.sqrt(max(sq, 0.0))

    return err


def run(state0: FactorState, target: Target, config: SolverConfig) -> Trace:
    """Iterate gradient descent until the rank-r approximation error falls
    below ``config.epsilon`` or the iteration budget is exhausted.

    Parameters
    ----------
    state0 : FactorState
        Initial iterate; its dimensions must match the target.
    target : Target
        PSD target with a positive eigengap. Block diagnostics assume the
        target is expressed in its eigenbasis (identity basis).
    config : SolverConfig
        Step size, tolerance, budget, and recording cadence.

    Returns
    -------
    Trace
        One record every ``record_every`` iterations plus the first and
        last, with ``converged`` stating whether the tolerance was met.

    Raises
    ------
    DivergenceError
        If the iterate norm reaches the divergence guard; the partial
        trace rides on the exception.
    """
    if state0.dim != target.dim:
        raise ValueError(f"state is {state0.dim}-dimensional, target is {target.dim}")
    if not target.is_psd:
        raise ValueError("symmetric solver requires a PSD target")
    err_fn = _error_fn(target)
    lam_r_diag = np.diag(target.leading)
    r = target.rank
    lam1, gap, lam_r = target.lambda_top, target.gap, target.lambda_r

    def make_record(t, x, err):
        u, j = x[:r], x[r:]
        s1x = float(linalg.singular_values(x)[0])
        s1j = float(linalg.singular_values(j)[0])
        sru = float(linalg.singular_values(u)[-1])
        ratio = math.inf if sru <= SIGNAL_FLOOR else (s1j / sru) ** 2
        s1p = float(linalg.singular_values(lam_r_diag - u @ u.T)[0])
        slack = DEFAULT_REGION_SLACK
        in_r2 = s1x ** 2 <= 2 * lam1 + slack and s1j ** 2 <= lam_r - gap / 2 + slack
        in_r = in_r2 and sru ** 2 >= gap / 4 - slack
        return TraceRecord(t, err, s1x, s1j, sru, ratio, s1p, in_r, in_r2)

    records = []
    x = state0.x.copy()
    eta = config.eta
    converged = False
    t = 0
    start = time.perf_counter()
    while True:
        norm = float(np.linalg.norm(x))
        diverged = norm >= DIVERGENCE_LIMIT
        err = err_fn(x)
        terminal = diverged or err <= config.epsilon or t >= config.max_iters
        if t % config.record_every == 0 or terminal:
            records.append(make_record(t, x, err))
        if diverged:
            wall = time.perf_counter() - start
            trace = Trace(records, False, t, err, wall, FactorState(x))
            raise DivergenceError(
                f"iterate norm {norm:.3e} reached the divergence guard at iteration {t}", trace
            )
        if err <= config.epsilon:
            converged = True
            break
        if t >= config.max_iters:
            break
        x = x + eta * (_sigma_product(target, x) - x @ (x.T @ x))
        t += 1
    wall = time.perf_counter() - start
    return Trace(records, converged, t, err, wall, FactorState(x))
