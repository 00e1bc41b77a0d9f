"""Reweighted l1-ball projection solver for the nonconvex lp-ball projection.

Each iteration linearizes the smoothed constraint sum_i (x_i + eps_i)^p <= gamma
at the current iterate, which yields a weighted l1 ball contained in the
feasible set; the next iterate is the exact Euclidean projection onto that
ball.  The smoothing vector eps shrinks geometrically whenever the
movement-times-weight test fires, and the loop stops once the normalized
stationarity and feasibility residuals drop below ``delta_tol`` relative to
their starting scale.

Large instances exploit the sparsity the iteration itself creates: once every
zero coordinate's breakpoint is dominated by the multiplier beyond any chance
of re-entry, those coordinates are frozen and carried as closed-form
aggregates (their smoothing mass is the only remaining coupling), making late
iterations cost O(support) instead of O(n).  A per-iteration guard re-expands
the frozen tail if the domination margin ever erodes.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    CONVERGED,
    EPS_FLOOR,
    InvariantViolation,
    IterateState,
    IterateSummary,
    MAX_ITER_EXCEEDED,
    ProblemInstance,
    ReducedInstance,
    RunReport,
    SolverOptions,
    TRIVIAL_INSIDE_BALL,
    csum,
    inside_ball,
    recover,
    residual_beta,
    split_signs,
)
from .weighted_l1 import project_weighted_l1

# additive slack used by the built-in invariant audits
_AUDIT_SLACK = 1e-12
_TIGHTNESS_SLACK = 1e-9

# frozen-tail gating: minimum problem size, domination factor required to
# freeze a zero coordinate, and the margin whose loss re-expands the tail
_COMPACT_MIN_N = 20000
_COMPACT_MAX_WORKING = 4096
_DOMINANCE = 1e-6
_REENTRY_MARGIN = 1e-3


@dataclass(frozen=True)
class EpsilonSchedule:
    """Result of one smoothing update: new eps, the shrink factor last used,
    and the iteration indices at which the update has fired."""

    eps: np.ndarray
    theta_last: float
    trigger_log: tuple


def compute_weights(x, eps, p: float) -> np.ndarray:
    """Linearization weights w_i = p * (x_i + eps_i)^(p-1); finite since eps > 0."""
    x = np.asarray(x, dtype=np.float64).ravel()
    eps = np.asarray(eps, dtype=np.float64).ravel()
    return p * (x + eps) ** (p - 1.0)


def subproblem_radius(x, eps, w, p: float, gamma: float) -> float:
    """Radius gamma - sum_i (x_i+eps_i)^p + sum_i w_i x_i of the linearized ball.

    Positive whenever the smoothed feasibility sum_i (x_i+eps_i)^p <= gamma is
    maintained; a nonpositive value means the schedule or arithmetic broke.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    eps = np.asarray(eps, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    value = gamma + csum(w * x - (x + eps) ** p)
    if not value > 0.0:
        raise InvariantViolation(f"subproblem radius {value} is not positive")
    return float(value)


def _shrink_factor(beta_next: float, k: int, p: float, opts: SolverOptions) -> float:
    theta = min(beta_next, 1.0 / math.sqrt(max(k, 1))) ** (1.0 / p)
    return min(max(theta, opts.theta_floor), opts.theta_cap)


def update_epsilon(
    state: IterateState,
    x_next,
    beta_next: float,
    p: float,
    opts: SolverOptions,
    trigger_log: tuple = (),
    theta_prev: float = math.nan,
) -> EpsilonSchedule:
    """Shrink eps by theta when the step was cheap relative to its weights.

    The trigger fires when ||x_next - x|| * ||w restricted to moved
    coordinates||^tau <= big_m.  The shrink factor is
    min(beta(x_next), 1/sqrt(max(k,1)))^(1/p), clamped into
    [theta_floor, theta_cap]; with ``freeze_epsilon`` the trigger is still
    recorded but eps stays put.
    """
    x_next = np.asarray(x_next, dtype=np.float64).ravel()
    delta = x_next - state.x
    moved = delta != 0.0
    lhs = float(np.linalg.norm(delta)) * float(np.linalg.norm(state.w[moved])) ** opts.tau
    triggered = bool(lhs <= opts.big_m)
    if triggered and not opts.freeze_epsilon:
        theta = _shrink_factor(beta_next, state.k, p, opts)
        eps_next = np.maximum(theta * state.eps, EPS_FLOOR)
    else:
        theta = theta_prev
        eps_next = state.eps
    return EpsilonSchedule(
        eps=eps_next,
        theta_last=theta,
        trigger_log=trigger_log + (state.k,) if triggered else trigger_log,
    )


def init_state(reduced: ReducedInstance, opts: SolverOptions, eps0=None) -> IterateState:
    """Starting state: x = 0 and a random eps with sum_i eps_i^p = 0.9^p * gamma.

    ``eps0`` may be injected to replay a recorded run; it must be strictly
    positive with sum_i eps0_i^p <= gamma so the first subproblem is feasible.
    """
    p, gamma = reduced.p, reduced.gamma
    m = reduced.m
    if csum(reduced.y_bar**p) <= gamma:
        raise InvariantViolation("instance lies inside the ball; nothing to solve")
    if eps0 is not None:
        eps = np.asarray(eps0, dtype=np.float64).ravel().copy()
        if eps.size != m:
            raise ValueError(f"eps0 must have {m} coordinates, got {eps.size}")
        if np.any(eps <= 0.0):
            raise ValueError("eps0 must be strictly positive")
        if csum(eps**p) > gamma:
            raise ValueError("eps0 violates sum eps_i^p <= gamma")
    else:
        rng = np.random.default_rng(opts.seed)
        nu = rng.uniform(size=m)
        while not nu.sum() > 0.0:
            nu = rng.uniform(size=m)
        eps = 0.9 * (gamma * nu / csum(nu)) ** (1.0 / p)
    x0 = np.zeros(m)
    w0, tp0 = _weights_and_powers(x0, eps, p)
    gamma0 = _radius(x0, w0, tp0, gamma)
    return IterateState(
        k=0,
        x=x0,
        eps=eps,
        w=w0,
        lam=0.0,
        gamma_k=gamma0,
        alpha_res=0.0,
        beta_res=residual_beta(x0, p, gamma),
        triggered=False,
    )


def _weights_and_powers(x, eps, p):
    """One-pow evaluation of (x+eps)^p and the weights p*(x+eps)^(p-1)."""
    t = x + eps
    tp = t**p
    return p * tp / t, tp


def _radius(x, w, tp, gamma, tail_pnorm=0.0):
    value = gamma - tail_pnorm + csum(w * x - tp)
    if not value > 0.0:
        raise InvariantViolation(f"subproblem radius {value} is not positive")
    return float(value)


class _TailInvalid(Exception):
    """The frozen tail no longer dominates; the step must rerun in full space."""


class _FrozenTail:
    """Zero coordinates whose breakpoints are dominated beyond re-entry.

    Their x stays 0 and their weights never touch the subproblem again; the
    only live coupling is sum eps_i^p inside the subproblem radius, tracked in
    closed form under the multiplicative eps updates max(theta*eps, floor).
    """

    def __init__(self, idx, eps, y_bar, p):
        self.idx = idx
        self.p = p
        self.eps0 = eps.copy()
        order = np.argsort(eps)
        self.eps_sorted = eps[order]
        powers = np.cumsum((self.eps_sorted[::-1] ** p).astype(np.longdouble))
        self.suffix = np.append(powers[::-1].astype(np.float64), 0.0)
        self.theta_cum = 1.0
        with np.errstate(over="ignore"):
            self.z_base = float(np.max(y_bar * eps ** (1.0 - p))) / p
        self.y_max = float(np.max(y_bar))
        self.eps0_max = float(np.max(eps))

    def shrink(self, theta: float):
        self.theta_cum *= theta

    def pnorm(self) -> float:
        """sum_i max(theta_cum * eps0_i, floor)^p over the tail."""
        m = self.eps_sorted.size
        if self.theta_cum <= 0.0:
            return m * EPS_FLOOR**self.p
        cut = EPS_FLOOR / self.theta_cum
        j = int(np.searchsorted(self.eps_sorted, cut, side="right"))
        return j * EPS_FLOOR**self.p + self.theta_cum**self.p * float(self.suffix[j])

    def z_max(self) -> float:
        """Upper bound on the tail's breakpoints y_i / w_i."""
        clamped = EPS_FLOOR ** (1.0 - self.p) * self.y_max / self.p
        if self.theta_cum <= 0.0:
            return clamped
        return max(self.theta_cum ** (1.0 - self.p) * self.z_base, clamped)

    def eps_max(self) -> float:
        return max(self.theta_cum * self.eps0_max, EPS_FLOOR)

    def materialize(self) -> np.ndarray:
        return np.maximum(self.theta_cum * self.eps0, EPS_FLOOR)


def _audit_step(state, x_next, lam_next, eps_next, y_bar, p, gamma, gamma_k_used,
                tail_pnorm=0.0, tail_eps_max=0.0, working_pnorm=None):
    if not np.any(x_next != 0.0):
        raise InvariantViolation("iterate has empty support")
    if np.any(x_next < 0.0) or np.any(x_next > y_bar):
        raise InvariantViolation("iterate left the box [0, y_bar]")
    # descent, in the cancellation-free inner-product form
    descent = 2.0 * csum((state.x - x_next) * (x_next - y_bar))
    if descent < -_AUDIT_SLACK:
        raise InvariantViolation(f"descent inequality violated by {descent}")
    tight = abs(csum(state.w * x_next) - gamma_k_used)
    if tight > _TIGHTNESS_SLACK * max(1.0, gamma_k_used):
        raise InvariantViolation(f"subproblem tightness gap {tight}")
    feas = (csum((x_next + eps_next) ** p) if working_pnorm is None else working_pnorm) + tail_pnorm
    if feas > gamma * (1.0 + _AUDIT_SLACK):
        raise InvariantViolation(f"smoothed feasibility broken: {feas} > {gamma}")
    eps_inf = max(float(np.max(state.eps)), tail_eps_max)
    lam_bound = csum(y_bar) / (p * (float(np.max(y_bar)) + eps_inf) ** (p - 1.0))
    if lam_next > lam_bound:
        raise InvariantViolation(f"multiplier {lam_next} exceeds bound {lam_bound}")


def step(state: IterateState, reduced, opts: SolverOptions, tail: _FrozenTail | None = None) -> IterateState:
    """One outer iteration: project onto the current weighted ball, update eps,
    and rebuild the linearization at the new iterate.

    ``tail``, when present, carries frozen zero coordinates; the state then
    lives on the working subspace only.
    """
    y_bar, p, gamma = reduced.y_bar, reduced.p, reduced.gamma
    sol = project_weighted_l1(y_bar, state.w, state.gamma_k)
    x_next = sol.x
    supp = np.flatnonzero(x_next)
    if supp.size == 0:
        raise InvariantViolation("iterate has empty support")
    ys, xs, ws = y_bar[supp], x_next[supp], state.w[supp]
    lam_next = max(csum(ys - xs) / csum(ws), 0.0)
    if tail is not None and lam_next * _REENTRY_MARGIN < tail.z_max():
        # the multiplier dropped into reach of frozen breakpoints, so this
        # subspace step is wrong; nothing has been mutated yet
        raise _TailInvalid
    xp = xs**p
    beta_next = abs(csum(xp) - gamma)
    alpha_next = csum(np.abs((ys - xs) * xs - lam_next * p * xp))

    # movement-triggered shrink, evaluated on the union of supports since
    # everything else cannot have moved
    union = np.union1d(supp, np.flatnonzero(state.x))
    delta = x_next[union] - state.x[union]
    moved = delta != 0.0
    lhs = float(np.linalg.norm(delta)) * float(np.linalg.norm(state.w[union][moved])) ** opts.tau
    triggered = bool(lhs <= opts.big_m)
    if triggered and not opts.freeze_epsilon:
        theta = _shrink_factor(beta_next, state.k, p, opts)
        eps_next = np.maximum(theta * state.eps, EPS_FLOOR)
        if tail is not None:
            tail.shrink(theta)
    else:
        eps_next = state.eps
    tail_pnorm = tail.pnorm() if tail is not None else 0.0
    w_next, tp_next = _weights_and_powers(x_next, eps_next, p)
    if opts.audit:
        _audit_step(
            state, x_next, lam_next, eps_next, y_bar, p, gamma, state.gamma_k,
            tail_pnorm=tail_pnorm,
            tail_eps_max=tail.eps_max() if tail is not None else 0.0,
            working_pnorm=csum(tp_next),
        )
    gamma_next = _radius(x_next, w_next, tp_next, gamma, tail_pnorm)
    return IterateState(
        k=state.k + 1,
        x=x_next,
        eps=eps_next,
        w=w_next,
        lam=lam_next,
        gamma_k=gamma_next,
        alpha_res=alpha_next,
        beta_res=beta_next,
        triggered=triggered,
    )


@dataclass(frozen=True)
class _WorkingProblem:
    """Subspace view used while a frozen tail is active."""

    y_bar: np.ndarray
    p: float
    gamma: float


def _try_freeze(state, reduced, collect, lam_prev):
    """Freeze dominated zero coordinates into a tail, if safely possible.

    Requires the multiplier to have settled (within 4x of its previous value)
    so that domination margins are meaningful.
    """
    if collect is not None or reduced.m < _COMPACT_MIN_N or state.lam <= 0.0:
        return None
    if not lam_prev > 0.0 or not 0.25 <= state.lam / lam_prev <= 4.0:
        return None
    z = reduced.y_bar / state.w
    working = z > state.lam * _DOMINANCE
    n_work = int(np.count_nonzero(working))
    if n_work > _COMPACT_MAX_WORKING or n_work == reduced.m:
        return None
    if np.any(state.x[~working] != 0.0):
        return None
    dead_idx = np.flatnonzero(~working)
    work_idx = np.flatnonzero(working)
    tail = _FrozenTail(dead_idx, state.eps[dead_idx], reduced.y_bar[dead_idx], reduced.p)
    sub = _WorkingProblem(y_bar=reduced.y_bar[work_idx], p=reduced.p, gamma=reduced.gamma)
    sub_state = IterateState(
        k=state.k,
        x=state.x[work_idx],
        eps=state.eps[work_idx],
        w=state.w[work_idx],
        lam=state.lam,
        gamma_k=state.gamma_k,
        alpha_res=state.alpha_res,
        beta_res=state.beta_res,
        triggered=state.triggered,
    )
    return tail, sub, sub_state, work_idx


def _thaw(state, tail, reduced, work_idx):
    """Rebuild the full-space state from a working state and its frozen tail."""
    m = reduced.m
    x = np.zeros(m)
    x[work_idx] = state.x
    eps = np.empty(m)
    eps[work_idx] = state.eps
    eps[tail.idx] = tail.materialize()
    w, tp = _weights_and_powers(x, eps, reduced.p)
    gamma_k = _radius(x, w, tp, reduced.gamma)
    return IterateState(
        k=state.k, x=x, eps=eps, w=w, lam=state.lam, gamma_k=gamma_k,
        alpha_res=state.alpha_res, beta_res=state.beta_res, triggered=state.triggered,
    )


def solve(
    instance: ProblemInstance,
    opts: SolverOptions | None = None,
    eps0=None,
    collect=None,
) -> RunReport:
    """Project ``instance.y`` onto its lp ball.

    Returns the solution in original signed coordinates together with the
    residual history.  Points already inside the ball are returned unchanged.
    ``collect``, if given, is called with every IterateState (including the
    initial one), which is how traces and external audits hook in; it also
    pins the solver to plain full-vector iterations.
    """
    t0 = time.perf_counter()
    opts = opts or SolverOptions()

    if inside_ball(instance):
        return RunReport(
            x_final=instance.y.copy(),
            lambda_final=0.0,
            iterations=0,
            status=TRIVIAL_INSIDE_BALL,
            history=[],
            wall_time=time.perf_counter() - t0,
            alpha_final=0.0,
            beta_final=abs(csum(np.abs(instance.y) ** instance.p) - instance.gamma),
            n=instance.n,
        )

    reduced = split_signs(instance)
    state = init_state(reduced, opts, eps0=eps0)
    # termination baseline: alpha at (0, 0) vanishes, so max(beta(0), 1) is
    # what the relative test measures against
    baseline = max(state.beta_res, 1.0)
    threshold = opts.delta_tol * baseline
    n = instance.n

    history = [IterateSummary.from_state(state)]
    trigger_log = []
    if collect is not None:
        collect(state)

    tail = None
    sub = reduced
    work_idx = None
    status = MAX_ITER_EXCEEDED
    for _ in range(opts.max_iter):
        try:
            state = step(state, sub, opts, tail=tail)
        except _TailInvalid:
            state = _thaw(state, tail, reduced, work_idx)
            tail, sub, work_idx = None, reduced, None
            state = step(state, sub, opts)
        history.append(IterateSummary.from_state(state))
        if state.triggered:
            trigger_log.append(state.k - 1)
        if collect is not None:
            collect(state)
        if max(state.alpha_res / n, state.beta_res) <= threshold:
            status = CONVERGED
            break
        if tail is None:
            frozen = _try_freeze(state, reduced, collect, history[-2].lam)
            if frozen is not None:
                tail, sub, state, work_idx = frozen
        elif tail.z_max() > state.lam * _REENTRY_MARGIN:
            state = _thaw(state, tail, reduced, work_idx)
            tail, sub, work_idx = None, reduced, None

    if tail is not None:
        x_full = np.zeros(reduced.m)
        x_full[work_idx] = state.x
    else:
        x_full = state.x

    return RunReport(
        x_final=recover(reduced, x_full),
        lambda_final=state.lam,
        iterations=state.k,
        status=status,
        history=history,
        wall_time=time.perf_counter() - t0,
        trigger_log=tuple(trigger_log),
        alpha_final=state.alpha_res,
        beta_final=state.beta_res,
        n=n,
    )
