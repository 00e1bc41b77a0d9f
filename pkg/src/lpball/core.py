"""Domain types, orthant reduction, and optimality residuals for lp-ball projection.

The projection problem is

    min 0.5 * ||x - y||_2^2   s.t.   sum_i |x_i|^p <= gamma,    0 < p < 1.

Everything downstream works in the nonnegative orthant: the sign pattern of y is
split off first, zero coordinates are removed, and solutions are recomposed at
the end.  The residuals defined here measure first-order stationarity (alpha)
and feasibility (beta) of a primal-dual pair; both vanish exactly at stationary
points of the reduced problem.
"""

import math
from dataclasses import dataclass, field

import numpy as np

# run statuses shared by all solvers
CONVERGED = "converged"
MAX_ITER_EXCEEDED = "max_iter_exceeded"
TRIVIAL_INSIDE_BALL = "trivial_inside_ball"
FAILED = "failed"

# Smoothing vectors are floored here so that p*(x+eps)**(p-1) stays far from
# overflow even when squared inside norm computations.
EPS_FLOOR = 1e-150

_FSUM_CUTOFF = 2048


class InvariantViolation(RuntimeError):
    """A runtime condition guaranteed by the algorithm's theory failed."""


def csum(values) -> float:
    """Compensated sum of a 1-d array.

    Exact (correctly rounded) for arrays up to the block size; above that,
    pairwise block partials are combined exactly, keeping the total error at
    a few ulp of sum(|values|) independently of length.
    """
    a = np.asarray(values, dtype=np.float64).ravel()
    n = a.size
    if n == 0:
        return 0.0
    if n <= _FSUM_CUTOFF:
        return math.fsum(a.tolist())
    head = n - n % _FSUM_CUTOFF
    partials = a[:head].reshape(-1, _FSUM_CUTOFF).sum(axis=1).tolist()
    partials.extend(a[head:].tolist())
    return math.fsum(partials)


def _frozen_vector(values) -> np.ndarray:
    v = np.array(values, dtype=np.float64).ravel()
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class ProblemInstance:
    """One projection problem: point ``y``, exponent ``p`` in (0,1), radius ``gamma``."""

    y: np.ndarray
    p: float
    gamma: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if y.size < 1:
            raise ValueError("y must have at least one coordinate")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        if not 0.0 < float(self.p) < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not float(self.gamma) > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "y", _frozen_vector(y))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class ReducedInstance:
    """Sign-reduced problem data: ``y_bar = |y|`` with exact zeros removed.

    ``signs`` keeps the full-length sign pattern and ``zero_index_map`` the
    positions that were dropped, so any nonnegative solution of the reduced
    problem can be recomposed into original coordinates exactly.
    """

    y_bar: np.ndarray
    signs: np.ndarray
    zero_index_map: tuple
    p: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "y_bar", _frozen_vector(self.y_bar))
        object.__setattr__(self, "signs", _frozen_vector(self.signs))

    @property
    def n(self) -> int:
        """Dimension of the original problem."""
        return self.signs.size

    @property
    def m(self) -> int:
        """Dimension after removing zero coordinates."""
        return self.y_bar.size


@dataclass(frozen=True)
class SolverOptions:
    """Hyperparameters of the reweighted-projection solver.

    ``tau`` and ``big_m`` steer the smoothing-update trigger, ``delta_tol``
    the relative termination test, ``theta_floor``/``theta_cap`` clamp the
    per-trigger shrink factor into (0, 1).  ``audit`` switches the built-in
    invariant checks (on by default; turn off for timing runs).
    ``freeze_epsilon`` keeps the smoothing vector constant, for fixed-accuracy
    experiments.
    """

    tau: float = 1.1
    big_m: float = 100.0
    delta_tol: float = 1e-8
    max_iter: int = 1000
    theta_floor: float = 1e-12
    theta_cap: float = 0.99
    seed: int = 0
    audit: bool = True
    freeze_epsilon: bool = False

    def __post_init__(self):
        if not self.tau > 1.0:
            raise ValueError("tau must exceed 1")
        if not self.big_m > 0.0:
            raise ValueError("big_m must be positive")
        if not self.delta_tol > 0.0:
            raise ValueError("delta_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.theta_floor < self.theta_cap < 1.0:
            raise ValueError("need 0 < theta_floor < theta_cap < 1")


@dataclass(frozen=True)
class IterateState:
    """Full solver state at one iteration.

    Holds the iterate ``x`` with its smoothing vector ``eps``, the weights
    ``w`` and subproblem radius ``gamma_k`` built at this iterate, the
    multiplier ``lam`` of the subproblem that produced ``x``, the residuals at
    ``x``, and whether the smoothing update fired on the step into this state.
    """

    k: int
    x: np.ndarray
    eps: np.ndarray
    w: np.ndarray
    lam: float
    gamma_k: float
    alpha_res: float
    beta_res: float
    triggered: bool


@dataclass(frozen=True)
class IterateSummary:
    """Scalar digest of an IterateState, kept in run histories."""

    k: int
    lam: float
    gamma_k: float
    alpha_res: float
    beta_res: float
    triggered: bool
    eps_max: float
    support_size: int

    @staticmethod
    def from_state(state: IterateState) -> "IterateSummary":
        return IterateSummary(
            k=state.k,
            lam=state.lam,
            gamma_k=state.gamma_k,
            alpha_res=state.alpha_res,
            beta_res=state.beta_res,
            triggered=state.triggered,
            eps_max=float(np.max(state.eps)) if state.eps.size else 0.0,
            support_size=int(np.count_nonzero(state.x)),
        )


@dataclass
class RunReport:
    """Outcome of one solver run, in original (signed) coordinates."""

    x_final: np.ndarray
    lambda_final: float
    iterations: int
    status: str
    history: list = field(default_factory=list)
    wall_time: float = 0.0
    trigger_log: tuple = ()
    alpha_final: float = 0.0
    beta_final: float = 0.0
    n: int = 0

    @property
    def alpha_bar_final(self) -> float:
        return self.alpha_final / max(self.n, 1)

    @property
    def trigger_count(self) -> int:
        return len(self.trigger_log)


def split_signs(instance: ProblemInstance) -> ReducedInstance:
    """Reduce an instance to the nonnegative orthant.

    Any optimal solution keeps the signs of y and is zero wherever y is, so
    it suffices to project |y| (with zero coordinates removed) onto the ball
    intersected with the nonnegative orthant.
    """
    y = instance.y
    signs = np.sign(y)
    nonzero = y != 0.0
    y_bar = np.abs(y[nonzero])
    zero_index_map = tuple(int(i) for i in np.flatnonzero(~nonzero))
    return ReducedInstance(
        y_bar=y_bar,
        signs=signs,
        zero_index_map=zero_index_map,
        p=instance.p,
        gamma=instance.gamma,
    )


def recover(reduced: ReducedInstance, x_plus) -> np.ndarray:
    """Map a nonnegative reduced-space vector back to signed original coordinates."""
    x_plus = np.asarray(x_plus, dtype=np.float64).ravel()
    if x_plus.size != reduced.m:
        raise ValueError(
            f"dimension mismatch: expected {reduced.m} coordinates, got {x_plus.size}"
        )
    out = np.zeros(reduced.n)
    kept = np.flatnonzero(reduced.signs)
    out[kept] = reduced.signs[kept] * x_plus
    return out


def inside_ball(instance: ProblemInstance) -> bool:
    """True iff y already satisfies the constraint, making the projection trivial."""
    return csum(np.abs(instance.y) ** instance.p) <= instance.gamma


def residual_alpha(x, lam: float, y_bar, p: float) -> float:
    """Stationarity residual: sum_i |(y_bar_i - x_i) x_i - lam * p * x_i^p|.

    Coordinates with x_i = 0 contribute nothing (every term carries a factor
    x_i), so they are skipped; this also sidesteps 0**p edge cases.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y_bar = np.asarray(y_bar, dtype=np.float64).ravel()
    support = x != 0.0
    if not support.any():
        return 0.0
    xs = x[support]
    terms = np.abs((y_bar[support] - xs) * xs - lam * p * xs**p)
    return csum(terms)


def residual_beta(x, p: float, gamma: float) -> float:
    """Feasibility residual: |sum_i x_i^p - gamma| (with 0^p taken as 0)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    support = x != 0.0
    return abs(csum(x[support] ** p) - gamma)


def relaxed_residuals(x, lam: float, eps, y_bar, p: float, gamma: float) -> tuple:
    """Residuals evaluated on the eps-smoothed constraint.

    Returns ``(alpha_eps, beta_eps)`` with

        alpha_eps = sum_i |(y_bar_i - x_i) x_i - lam * p * (x_i + eps_i)^(p-1) x_i|
        beta_eps  = |sum_i (x_i + eps_i)^p - gamma|.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    eps = np.asarray(eps, dtype=np.float64).ravel()
    y_bar = np.asarray(y_bar, dtype=np.float64).ravel()
    shifted = x + eps
    alpha_eps = csum(np.abs((y_bar - x) * x - lam * p * shifted ** (p - 1.0) * x))
    beta_eps = abs(csum(shifted**p) - gamma)
    return alpha_eps, beta_eps


def lambda_estimate(x, y_bar, w) -> float:
    """Multiplier estimate sum_{x_i>0} (y_bar_i - x_i) / sum_{x_i>0} w_i.

    For an exact solution of the weighted-ball subproblem this recovers its
    unique multiplier.  Raises if the support is empty, which the solver
    guarantees can never happen after the first step.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y_bar = np.asarray(y_bar, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    support = x != 0.0
    if not support.any():
        raise InvariantViolation("multiplier estimate on empty support")
    num = csum(y_bar[support] - x[support])
    den = csum(w[support])
    return max(num / den, 0.0)
