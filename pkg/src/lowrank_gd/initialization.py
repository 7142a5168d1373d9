"""Random initialization schemes and deterministic entry conditions.

Covers the scaled Gaussian initializations, the decay exponent governing
how small "small" has to be, and the four-clause deterministic condition
under which the warm-up phase admits a closed-form iteration budget.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .spectrum import Target
from .sym_gd import FactorState, split_blocks
from . import linalg

SCHEMES = ("small", "moderate", "explicit")


@dataclass
class InitPlan:
    """How to build the initial iterate.

    * ``moderate``: X0 = alpha * N0 with the given alpha.
    * ``small``: alpha is derived from the decay-exponent bound
      (``small_alpha_bound``) scaled by ``multiplier``.
    * ``explicit``: use ``matrix`` as given.
    """

    scheme: str = "moderate"
    alpha: float = 0.5
    seed: int = 0
    multiplier: float = 1.0
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown init scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.multiplier <= 0:
            raise ValueError(f"multiplier must be positive, got {self.multiplier}")
        if self.scheme == "explicit" and self.matrix is None:
            raise ValueError("explicit scheme requires a matrix")


def gaussian_factor(d: int, r: int, seed: int) -> np.ndarray:
    """d x r matrix with i.i.d. N(0, 1/d) entries.

    Deterministic for fixed (d, r, seed) within one build: draws come from
    numpy's seeded PCG64 generator.
    """
    if d < 1 or r < 1:
        raise ValueError(f"need d >= 1 and r >= 1, got d={d}, r={r}")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / math.sqrt(d), size=(d, r))


def gaussian_pair(d1: int, d2: int, r: int, seed: int):
    """Two independent factors for the asymmetric problem, drawn from one
    seeded stream with variance 1/max(d1, d2)."""
    d = max(d1, d2)
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(d)
    return rng.normal(0.0, scale, size=(d1, r)), rng.normal(0.0, scale, size=(d2, r))


def kappa(target: Target, eta: float) -> float:
    """Decay exponent comparing noise growth against signal growth.

    log(1 + eta * max(0, lambda_{r+1})) / log(1 + eta * (lambda_r - gap/2)),
    with the numerator clamped at zero for indefinite tails.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    denom_rate = target.lambda_r - target.gap / 2.0
    if denom_rate <= 0:
        raise ValueError("signal growth rate is degenerate: lambda_r - gap/2 <= 0")
    num = math.log1p(eta * max(0.0, target.lambda_r_plus_one))
    den = math.log1p(eta * denom_rate)
    return num / den


def small_alpha_bound(target: Target, eta: float, multiplier: float = 1.0) -> float:
    """Initialization magnitude below which the warm-up analysis applies:
    multiplier * d^(-(1+kappa)/(1-kappa))."""
    k = kappa(target, eta)
    if k >= 1.0:
        raise ValueError(f"decay exponent must be below 1, got {k}")
    return multiplier * target.dim ** (-(1.0 + k) / (1.0 - k))


@dataclass
class ClauseCheck:
    name: str
    holds: bool
    margin: float


@dataclass
class ConditionReport:
    """Outcome of the four-clause initialization condition. ``margin`` is
    how far inside (positive) or outside (negative) each clause sits."""

    holds: bool
    clauses: list

    def __bool__(self):
        return self.holds


def check_condition_1(state0: FactorState, target: Target, eta: float) -> ConditionReport:
    """Deterministic initialization condition guaranteeing entry into the
    absorbing region within the warm-up budget."""
    u0, j0 = split_blocks(state0)
    s1x2 = float(linalg.singular_values(state0.x)[0]) ** 2
    s1j2 = float(linalg.singular_values(j0)[0]) ** 2
    sru = float(linalg.singular_values(u0)[-1])
    sru2 = sru * sru
    lam1, lam_r, gap = target.lambda_top, target.lambda_r, target.gap
    k = kappa(target, eta)
    c1 = gap ** (1.0 - k / 2.0) / (2.0 ** (3.0 - k) * math.sqrt(lam1))

    clauses = [
        ClauseCheck("magnitude: sigma1^2(X0) <= lambda_1", s1x2 <= lam1, lam1 - s1x2),
        ClauseCheck(
            "noise: sigma1^2(J0) <= lambda_r - gap/2",
            s1j2 <= lam_r - gap / 2.0,
            lam_r - gap / 2.0 - s1j2,
        ),
        ClauseCheck(
            "signal window: 0 < sigma_r^2(U0) < gap/4",
            0.0 < sru2 < gap / 4.0,
            min(sru2, gap / 4.0 - sru2),
        ),
        ClauseCheck(
            "head start: sigma1^2(J0) <= c1 * sigma_r(U0)^(1+kappa)",
            s1j2 <= c1 * sru ** (1.0 + k),
            c1 * sru ** (1.0 + k) - s1j2,
        ),
    ]
    return ConditionReport(all(c.holds for c in clauses), clauses)


def warmup_budget(state0: FactorState, target: Target, eta: float) -> int:
    """Iterations needed for the signal block to clear gap/4, with the
    printed constant; zero when it already does."""
    u0, _ = split_blocks(state0)
    sru2 = float(linalg.singular_values(u0)[-1]) ** 2
    gap = target.gap
    if sru2 >= gap / 4.0:
        return 0
    if sru2 <= 0:
        raise ValueError("warm-up budget needs a nonsingular signal block")
    return math.ceil((2.0 / (eta * gap)) * math.log(gap / (4.0 * sru2)))


def initial_factor(plan: InitPlan, d: int, r: int, target: Target | None = None,
                   eta: float | None = None) -> np.ndarray:
    """Materialize the initial iterate described by the plan."""
    if plan.scheme == "explicit":
        m = linalg.as_matrix(plan.matrix, "explicit init")
        if m.shape != (d, r):
            raise ValueError(f"explicit init must be {d}x{r}, got {m.shape}")
        return m.copy()
    if plan.scheme == "small":
        if target is None or eta is None:
            raise ValueError("small scheme derives alpha from the target and eta")
        alpha = small_alpha_bound(target, eta, plan.multiplier)
    else:
        alpha = plan.alpha
    return alpha * gaussian_factor(d, r, plan.seed)
