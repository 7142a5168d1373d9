"""Leading-eigenspace computation on the Stiefel manifold, with and
without retraction.

The retraction-free iteration L <- L + eta (I - L L^T) Sigma L drives
L L^T to the projector onto the top-r eigenspace. The retracted variant
re-orthonormalizes the frame before every update and is the baseline the
wall-clock benchmark compares against. Scaling a frame by the matrix
square root of the target maps one retraction-free step onto one step of
the symmetric factored iteration, which is used as a per-step oracle.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import linalg
from .spectrum import RankROracle, Target
from .sym_gd import DIVERGENCE_LIMIT, DivergenceError, FactorState

METHODS = ("retraction_free", "rgd")


@dataclass
class EigState:
    """A d x r frame; orthonormal columns only after retraction."""

    l: np.ndarray

    def __post_init__(self):
        self.l = linalg.as_matrix(self.l, "frame")

    @property
    def dim(self) -> int:
        return self.l.shape[0]

    @property
    def rank(self) -> int:
        return self.l.shape[1]


@dataclass
class EigRecord:
    iter: int
    proj_error: float


@dataclass
class EigTrace:
    records: list
    converged: bool
    iterations: int
    final_error: float
    wall_time: float
    final_state: EigState

    def errors(self) -> np.ndarray:
        return np.array([rec.proj_error for rec in self.records])

    def iterations_to(self, tol: float):
        for rec in self.records:
            if rec.proj_error <= tol:
                return rec.iter
        return None


def _sigma_product(target, l: np.ndarray) -> np.ndarray:
    if isinstance(target, Target):
        if target.dim != l.shape[0]:
            raise ValueError(f"target is {target.dim}-dimensional but frame has {l.shape[0]} rows")
        if target.basis is None:
            return target.eigenvalues[:, None] * l
        return target.matrix @ l
    sigma = np.asarray(target, dtype=np.float64)
    if sigma.shape[0] != sigma.shape[1] or sigma.shape[0] != l.shape[0]:
        raise ValueError(f"sigma of shape {sigma.shape} does not match frame with {l.shape[0]} rows")
    return sigma @ l


def rf_step(state: EigState, sigma, eta: float) -> EigState:
    """One retraction-free step L + eta (I - L L^T) Sigma L."""
    l = state.l
    sl = _sigma_product(sigma, l)
    return EigState(l + eta * (sl - l @ (l.T @ sl)))


def retract(l_tilde) -> np.ndarray:
    """Pull a full-rank frame back onto the Stiefel manifold:
    L = L~ (L~^T L~)^(-1/2). Raises on rank-deficient input."""
    l_tilde = linalg.as_matrix(l_tilde, "frame")
    return l_tilde @ linalg.spd_inv_sqrt(l_tilde.T @ l_tilde)


def rgd_step(state: EigState, sigma, eta: float) -> EigState:
    """Retract the frame, then apply the Riemannian gradient update."""
    l = retract(state.l)
    sl = _sigma_product(sigma, l)
    return EigState(l + eta * (sl - l @ (l.T @ sl)))


def proj_error(state: EigState, oracle: RankROracle) -> float:
    """Frobenius distance of L L^T from the rank-r projector."""
    l = state.l
    return float(np.linalg.norm(oracle.projector - l @ l.T, "fro"))


def lift_to_sym(state: EigState, target: Target) -> FactorState:
    """Map the frame to the factored iterate X = Sigma^(1/2) L."""
    if not target.is_psd:
        raise ValueError("square-root lifting needs a PSD target")
    if target.dim != state.dim:
        raise ValueError(f"target is {target.dim}-dimensional, frame is {state.dim}")
    roots = np.sqrt(np.maximum(target.eigenvalues, 0.0))
    if target.basis is None:
        return FactorState(roots[:, None] * state.l)
    half = (target.basis * roots) @ target.basis.T
    return FactorState(half @ state.l)


def _proj_error_fn(target: Target):
    """Closure for ||Pi_r - L L^T||_F via the Gram identity
    r - 2 ||B_r^T L||_F^2 + ||L^T L||_F^2, avoiding d x d products."""
    r = target.rank
    basis = target.basis

    def err(l: np.ndarray) -> float:
        z = l if basis is None else basis.T @ l
        top = z[:r]
        gram = l.T @ l
        sq = r - 2.0 * float(np.sum(top * top)) + float(np.sum(gram * gram))
        return math.sqrt(max(sq, 0.0))

    return err


def run_eig(state0: EigState, target: Target, config, method: str = "retraction_free") -> EigTrace:
    """Iterate the chosen eigenspace method until the projection error
    falls below the tolerance or the budget runs out.

    Parameters
    ----------
    state0 : EigState
        Initial frame (used directly by the retraction-free method; the
        retracted method orthonormalizes it each iteration).
    target : Target
        PSD target with a positive eigengap.
    config : SolverConfig
        Step size, tolerance, budget, recording cadence.
    method : str
        "retraction_free" or "rgd".

    Returns
    -------
    EigTrace
        Projection errors at the recording cadence; ``wall_time`` measures
        the iteration loop only, so benchmark comparisons exclude setup.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    if not target.is_psd:
        raise ValueError("eigenspace computation needs a PSD target")
    if state0.dim != target.dim:
        raise ValueError(f"frame is {state0.dim}-dimensional, target is {target.dim}")
    err_fn = _proj_error_fn(target)
    retracted = method == "rgd"
    diag = target.basis is None
    eigs = target.eigenvalues
    sigma = None if diag else target.matrix

    records = []
    l = state0.l.copy()
    eta = config.eta
    converged = False
    t = 0
    start = time.perf_counter()
    while True:
        if retracted:
            l = l @ linalg.spd_inv_sqrt(l.T @ l)
        norm = float(np.linalg.norm(l))
        diverged = norm >= DIVERGENCE_LIMIT
        err = err_fn(l)
        terminal = diverged or err <= config.epsilon or t >= config.max_iters
        if t % config.record_every == 0 or terminal:
            records.append(EigRecord(t, err))
        if diverged:
            wall = time.perf_counter() - start
            trace = EigTrace(records, False, t, err, wall, EigState(l))
            raise DivergenceError(
                f"frame norm {norm:.3e} reached the divergence guard at iteration {t}", trace
            )
        if err <= config.epsilon:
            converged = True
            break
        if t >= config.max_iters:
            break
        sl = eigs[:, None] * l if diag else sigma @ l
        l = l + eta * (sl - l @ (l.T @ sl))
        t += 1
    wall = time.perf_counter() - start
    return EigTrace(records, converged, t, err, wall, EigState(l))
