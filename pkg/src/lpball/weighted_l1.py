"""Exact Euclidean projection onto a weighted l1 ball in the nonnegative orthant.

Solves

    min 0.5 * ||x - y_bar||_2^2   s.t.   sum_i w_i x_i <= r,  x >= 0

with strictly positive weights, by scanning the breakpoints z_i = y_bar_i / w_i
of the piecewise-linear multiplier equation.  The solution is the threshold
vector x_i = max(y_bar_i - lam * w_i, 0) for the unique lam >= 0 that makes the
constraint tight (or lam = 0 if y_bar is already feasible).  A brute-force
support-enumeration oracle is included for verification at small dimensions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import InvariantViolation, csum

_ORACLE_MAX_DIM = 20


@dataclass(frozen=True)
class KktReport:
    """Optimality gaps of a returned projection.

    ``max_stationarity_violation`` covers both branches of the threshold
    system: |y_bar_i - x_i - lam*w_i| on the support and the positive part of
    y_bar_i - lam*w_i off it.  ``tightness_gap`` is |sum w_i x_i - r| when the
    constraint is active and 0 for interior solutions.
    """

    max_stationarity_violation: float
    complementarity_gap: float
    tightness_gap: float


@dataclass(frozen=True)
class WeightedL1Solution:
    x: np.ndarray
    lam: float
    kkt: KktReport


def _validate(y_bar, w, r):
    y_bar = np.asarray(y_bar, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if y_bar.size != w.size:
        raise ValueError("y_bar and w must have the same length")
    if y_bar.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(y_bar)) or not np.all(np.isfinite(w)):
        raise ValueError("inputs must be finite")
    if np.any(w <= 0.0):
        raise ValueError("weights must be strictly positive")
    if not r > 0.0:
        raise ValueError("radius must be strictly positive")
    return y_bar, w, float(r)


def _scan_breakpoints(z, y_bar, w, r, force_full=False):
    """Locate the active set: the shortest descending-z prefix whose candidate
    multiplier (prefix_sum(w*y_bar) - r) / prefix_sum(w*w) reaches the next
    breakpoint.

    Solutions are typically very sparse, so only the top-k breakpoints are
    partitioned out and scanned, growing k until the segment is found; the
    worst case degenerates to one full sort.  Returns (scanned indices in
    descending z order, active prefix length, boundary z below the scan).
    """
    n = z.size
    k = n if force_full else min(n, 2048)
    while True:
        if k >= n:
            idx = np.argsort(-z)
            boundary = 0.0
        else:
            ap = np.argpartition(-z, k)
            idx = ap[:k]
            idx = idx[np.argsort(-z[idx])]
            boundary = float(z[ap[k]])
        zs = z[idx]
        ws = w[idx]
        with np.errstate(over="ignore", invalid="ignore"):
            sa = np.cumsum(ws * y_bar[idx])
            sb = np.cumsum(ws * ws)
            lam_cand = (sa - r) / sb
        z_next = np.append(zs[1:], boundary)
        hit = np.isfinite(lam_cand) & (lam_cand >= z_next)
        if hit.any():
            j = int(np.argmax(hit))
            return idx, j + 1, boundary
        if k >= n:
            raise InvariantViolation("breakpoint scan found no segment")
        k = min(n, k * 16)


def _absorb_pinned_gap(xs, lam, ys, ws, zs, r, gap, tol):
    """Repair the tightness gap left when the multiplier pins to a breakpoint.

    With widely spread weights the exact multiplier can sit closer to a
    breakpoint than one ulp of itself, in which case the threshold formula
    cannot express the minuscule mass the optimizer places on the pinned
    coordinates, even though that mass itself is representable.  The exact
    correction adds w_i * dlam to every eligible coordinate, i.e. w_i^2-scaled
    mass, so feeding the largest weights first reproduces the exact allocation
    to machine precision.  Operates in place on the scanned slice ``xs``.
    """
    if gap > 0.0:
        cand = np.flatnonzero((zs >= lam * (1.0 - 1e-9)) & (xs < ys))
        order = cand[np.argsort(-(ws[cand] ** 2), kind="stable")]
        for i in order[:64]:
            t = min(gap / ws[i], ys[i] - xs[i])
            xs[i] += t
            gap = r - csum(ws * xs)
            if gap <= tol:
                break
    else:
        cand = np.flatnonzero(xs > 0.0)
        order = cand[np.argsort(-(ws[cand] ** 2), kind="stable")]
        for i in order[:64]:
            t = min(-gap / ws[i], xs[i])
            xs[i] -= t
            gap = r - csum(ws * xs)
            if gap >= -tol:
                break
    if abs(gap) > 1e-12 * max(1.0, r):
        raise InvariantViolation(f"could not restore subproblem tightness, gap {gap}")


def project_weighted_l1(y_bar, w, r) -> WeightedL1Solution:
    """Project ``y_bar`` onto {x >= 0 : sum w_i x_i <= r}.

    Breakpoint scan over z_i = y_bar_i / w_i plus a compensated polish of the
    multiplier, so the tightness gap stays at a few ulp of max(1, r) even when
    sum w_i y_bar_i dwarfs r.  O(n log n) worst case, O(n) for the sparse
    solutions the reweighting loop produces.
    """
    y_bar, w, r = _validate(y_bar, w, r)
    n = y_bar.size

    if csum(w * y_bar) <= r:
        x = y_bar.copy()
        kkt = KktReport(0.0, 0.0, 0.0)
        return WeightedL1Solution(x=x, lam=0.0, kkt=kkt)

    z = y_bar / w
    idx, j, boundary = _scan_breakpoints(z, y_bar, w, r)
    active = idx[:j]
    sb_act = csum(w[active] ** 2)
    lam = max((csum(w[active] * y_bar[active]) - r) / sb_act, 0.0)
    if lam < boundary * (1.0 + 1e-9):
        # multiplier pinned at the scan edge: widen to the full breakpoint list
        idx, j, boundary = _scan_breakpoints(z, y_bar, w, r, force_full=True)
        active = idx[:j]
        sb_act = csum(w[active] ** 2)
        lam = max((csum(w[active] * y_bar[active]) - r) / sb_act, 0.0)

    # every coordinate outside the scan has z <= boundary <= lam, hence x = 0;
    # all remaining work is on the scanned slice
    ys, ws, zs = y_bar[idx], w[idx], z[idx]
    xs = np.maximum(ys - lam * ws, 0.0)

    best = (lam, abs(csum(ws * xs) - r), xs)
    for _ in range(3):
        gap = csum(ws * xs) - r
        if abs(gap) <= 1e-14 * max(1.0, r):
            best = (lam, abs(gap), xs)
            break
        slope = csum(ws[xs > 0.0] ** 2)
        if slope <= 0.0:
            break
        lam_new = lam + gap / slope
        if lam_new < boundary:
            break
        lam = lam_new
        xs = np.maximum(ys - lam * ws, 0.0)
        gap_new = abs(csum(ws * xs) - r)
        if gap_new < best[1]:
            best = (lam, gap_new, xs)
    lam, _, xs = best

    tol = 1e-13 * max(1.0, r)
    gap = r - csum(ws * xs)
    if abs(gap) > tol:
        xs = xs.copy()
        _absorb_pinned_gap(xs, lam, ys, ws, zs, r, gap, tol)

    if not math.isfinite(lam) or lam < 0.0:
        raise InvariantViolation(f"invalid multiplier {lam}")

    x = np.zeros(n)
    x[idx] = xs
    support = xs > 0.0
    stat = 0.0
    if support.any():
        stat = float(np.max(np.abs(ys[support] - xs[support] - lam * ws[support])))
    off = ~support
    if off.any():
        stat = max(stat, float(np.max(np.maximum(ys[off] - lam * ws[off], 0.0))))
    tight_gap = abs(csum(ws * xs) - r)
    kkt = KktReport(
        max_stationarity_violation=stat,
        complementarity_gap=lam * tight_gap,
        tightness_gap=tight_gap,
    )
    return WeightedL1Solution(x=x, lam=lam, kkt=kkt)


def project_oracle(y_bar, w, r) -> WeightedL1Solution:
    """Brute-force reference projector: enumerate all candidate supports.

    For every support A the tightness equation gives the only possible
    multiplier lam = (sum_A w_i y_bar_i - r) / sum_A w_i^2; candidates that
    satisfy the sign conditions are kept and the one of least distance to
    y_bar is returned.  Exponential in the dimension, capped at
    20 coordinates.
    """
    y_bar, w, r = _validate(y_bar, w, r)
    n = y_bar.size
    if n > _ORACLE_MAX_DIM:
        raise ValueError(f"oracle supports at most {_ORACLE_MAX_DIM} coordinates, got {n}")

    if csum(w * y_bar) <= r:
        x = y_bar.copy()
        return WeightedL1Solution(x=x, lam=0.0, kkt=KktReport(0.0, 0.0, 0.0))

    idx = np.arange(n)
    best = None
    for mask in range(1, 2**n):
        members = idx[[(mask >> i) & 1 == 1 for i in range(n)]]
        sa = math.fsum((w[i] * y_bar[i] for i in members))
        sb = math.fsum((w[i] * w[i] for i in members))
        lam = (sa - r) / sb
        if lam < 0.0:
            continue
        x = np.zeros(n)
        x[members] = y_bar[members] - lam * w[members]
        if np.any(x[members] < 0.0):
            continue
        off = np.setdiff1d(idx, members, assume_unique=True)
        if off.size and np.any(y_bar[off] - lam * w[off] > 1e-9 * max(1.0, float(np.max(y_bar)))):
            continue
        obj = 0.5 * csum((x - y_bar) ** 2)
        if best is None or obj < best[0]:
            best = (obj, lam, x)
    if best is None:
        raise InvariantViolation("oracle found no KKT-feasible support")
    _, lam, x = best
    support = x > 0.0
    stat = float(np.max(np.abs(y_bar[support] - x[support] - lam * w[support])))
    if (~support).any():
        stat = max(
            stat,
            float(np.max(np.maximum(y_bar[~support] - lam * w[~support], 0.0))),
        )
    gap = abs(csum(w * x) - r)
    kkt = KktReport(
        max_stationarity_violation=stat, complementarity_gap=lam * gap, tightness_gap=gap
    )
    return WeightedL1Solution(x=x, lam=lam, kkt=kkt)
