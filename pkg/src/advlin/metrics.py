"""Margins, max-margin solver, closed-form bound calculators and slope fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .losses import Dataset, margins_unnormalised


class UndefinedMarginError(ValueError):
    """Margin of the zero model (division by ||w|| = 0)."""


class NotSeparableError(RuntimeError):
    pass


@dataclass(frozen=True)
class MarginReport:
    margin: float
    truncated: float
    argmin_index: int


@dataclass(frozen=True)
class MaxMarginSolution:
    gamma: float
    w_star: np.ndarray
    upper_bound: float
    iterations: int


@dataclass(frozen=True)
class BoundInputs:
    n: int
    d: int
    gamma: float
    alpha: float
    eta: float
    delta_conf: float = 0.1
    q: float = 2.0
    c: float = 1.0
    c_init: float = 1.0

    def __post_init__(self):
        if not 0 <= self.alpha < self.gamma:
            raise ValueError("need 0 <= alpha < gamma")
        if not self.q > 1:
            raise ValueError("need q > 1")
        if not 0 < self.delta_conf < 1:
            raise ValueError("need delta_conf in (0, 1)")
        if not self.eta > 0 or self.n < 1:
            raise ValueError("need eta > 0 and n >= 1")


def margin(w, S: Dataset) -> MarginReport:
    w = np.asarray(w, dtype=np.float64)
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        raise UndefinedMarginError("margin is undefined at w = 0")
    m = margins_unnormalised(w, S) / nrm
    i = int(np.argmin(m))
    return MarginReport(float(m[i]), max(0.0, float(m[i])), i)


def max_margin(S: Dataset, tol: float = 1e-6, max_iters: int = 1_000_000) -> MaxMarginSolution:
    """Hard-margin separator through the origin by dual coordinate ascent.

    Solves ``max_a sum(a) - 0.5 ||sum_i a_i y_i x_i||^2`` over ``a >= 0``.
    Any dual point with value D certifies ``gamma <= 1/sqrt(2 D)``; iteration
    stops once the primal margin of the current ``w`` is within ``tol`` of
    that certificate.  ``max_iters`` counts single-coordinate updates.
    """
    Z = S.y[:, None] * S.X
    sq = np.einsum("ij,ij->i", Z, Z)
    if np.any(sq == 0.0):
        raise NotSeparableError("an example has zero features; not separable through the origin")
    a = np.zeros(S.n)
    w = np.zeros(S.d)
    iters = 0
    best = (-math.inf, None)
    upper = math.inf
    while iters < max_iters:
        for i in range(S.n):
            step = max(-a[i], (1.0 - Z[i] @ w) / sq[i])
            if step != 0.0:
                a[i] += step
                w += step * Z[i]
        iters += S.n
        nrm = np.linalg.norm(w)
        dual = a.sum() - 0.5 * nrm * nrm
        if dual > 0:
            upper = min(upper, 1.0 / math.sqrt(2.0 * dual))
        if nrm > 0:
            m = float(np.min(Z @ w) / nrm)
            if m > best[0]:
                best = (m, w / nrm)
            if best[0] > 0 and upper - best[0] <= tol:
                break
        if not math.isfinite(nrm) or (a.sum() > 1e12):
            break
    gamma, w_star = best
    if w_star is None or gamma <= 0 or upper - gamma > tol:
        raise NotSeparableError(
            f"no certified separator after {iters} updates (margin {gamma}, upper bound {upper})"
        )
    return MaxMarginSolution(gamma, w_star, upper, iters)


# -- step caps and bounds -------------------------------------------------------

def gd_step_cap(gamma: float, alpha: float) -> float:
    if not 0 <= alpha < gamma:
        raise ValueError("need 0 <= alpha < gamma")
    return 1.0 / (2.0 * alpha / (gamma - alpha) + (1.0 + alpha) ** 2)


def sgd_step_cap(alpha: float) -> float:
    return min(1.0, 2.0 / (1.0 + alpha) ** 2)


def step_sum(schedule, t: int) -> float:
    """sum_{j=1}^{t-1} eta_j; ``schedule`` is a StepSchedule or a constant step."""
    if isinstance(schedule, (int, float)):
        return (t - 1) * float(schedule)
    return schedule.sum_from_one(t)


def gd_bound(t: int, gamma: float, alpha: float, schedule) -> float:
    """Upper envelope on the robust risk of alpha-GD (w0 = 0, eta0 = 1) at step t."""
    if t < 2:
        raise ValueError("bound holds for t >= 2")
    gap = gamma - alpha
    lt = math.log(t)
    return 1.0 / t + (0.25 + lt * lt / (gap * gap)) / step_sum(schedule, t)


def gd_bound_alt(t: int, gamma: float, alpha: float, eta: float) -> float:
    """Same envelope for a constant step, evaluated in a different order (cross-check)."""
    if t < 2:
        raise ValueError("bound holds for t >= 2")
    gap = gamma - alpha
    num = (gap ** 2 * 0.25 + math.log(t) ** 2) * t + eta * (t - 1) * gap ** 2
    return num / (eta * (t - 1) * t * gap ** 2)


def sgd_bound(t: int, gamma: float, alpha: float, eta: float, delta_conf: float) -> float:
    """High-probability bound on the robust risk of the averaged alpha-SGD iterate."""
    if t < 1:
        raise ValueError("need t >= 1")
    if not 0 < delta_conf <= 1:
        raise ValueError("need delta_conf in (0, 1]")
    gap = gamma - alpha
    lt = math.log(t)
    first = 4.0 * lt / gap + 6.0
    second = 8.0 * lt / gap ** 2 + 8.0 / gap + 4.0 * math.log(1.0 / delta_conf)
    return first * second / (eta * t)


def sgd_bound_alt(t: int, gamma: float, alpha: float, eta: float, delta_conf: float) -> float:
    gap = gamma - alpha
    lt = math.log(t)
    ld = -math.log(delta_conf)
    # expanded product
    terms = (
        32 * lt * lt / gap ** 3,
        32 * lt / gap ** 2,
        16 * lt * ld / gap,
        48 * lt / gap ** 2,
        48 / gap,
        24 * ld,
    )
    return math.fsum(terms) / (eta * t)


def perceptron_update_bound(gamma: float, alpha: float) -> float:
    if not 0 <= alpha < gamma:
        raise ValueError("need 0 <= alpha < gamma")
    return ((1.0 + alpha) / (gamma - alpha)) ** 2


def margin_trigger_level(n: int) -> float:
    """Robust-risk level below which margin >= alpha is guaranteed."""
    if n < 1:
        raise ValueError("need n >= 1")
    return math.log(2.0) / n


def c_q_predicate(t: int, q: float) -> bool:
    return 1.25 + math.log(t) ** 2 <= (t - 1) * t ** (-1.0 / q)


def c_q_constant(q: float, scan_limit: int = 10_000_000, method: str = "scan") -> int:
    """Smallest t >= 2 satisfying :func:`c_q_predicate`.

    ``method="scan"`` walks t = 2, 3, ... up to ``scan_limit``.  For q close to
    1 the answer is astronomically large (about e^105 at q = 1.1), so
    ``method="bisect"`` doubles t until the predicate holds and then bisects;
    it relies on the predicate switching from false to true exactly once.
    """
    if not q > 1:
        raise ValueError("need q > 1")
    if method == "scan":
        for t in range(2, scan_limit + 1):
            if c_q_predicate(t, q):
                return t
        raise RuntimeError(f"C_q scan exhausted at t = {scan_limit} for q = {q}")
    if method != "bisect":
        raise ValueError(f"unknown method {method!r}")
    if c_q_predicate(2, q):
        return 2
    lo, hi = 2, 4
    while not c_q_predicate(hi, q):
        lo, hi = hi, hi * 2
        if hi.bit_length() > 1000:
            raise RuntimeError(f"C_q search diverged for q = {q}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if c_q_predicate(mid, q):
            hi = mid
        else:
            lo = mid
    return hi


def corollary_gd_iters(inputs: BoundInputs, scan_limit: int = 10_000_000) -> float:
    gap = inputs.gamma - inputs.alpha
    power = (inputs.n / (inputs.eta * gap ** 2 * math.log(2.0))) ** inputs.q
    return max(float(c_q_constant(inputs.q, scan_limit)), power)


def corollary_sgd_iters(inputs: BoundInputs, scan_limit: int = 10_000_000) -> float:
    gap = inputs.gamma - inputs.alpha
    bracket = inputs.c * inputs.n / inputs.eta * (1.0 / gap ** 3 + math.log(1.0 / inputs.delta_conf) / gap)
    return max(float(c_q_constant(inputs.q, scan_limit)), bracket ** inputs.q)


def exp_gd_threshold(c_init: float, alpha: float) -> float:
    """exp(c / (1 - alpha)), the stated iteration count below which plain GD
    from (0, c) keeps margin below alpha."""
    if not c_init > 0 or not 0 < alpha < 1:
        raise ValueError("need c > 0 and 0 < alpha < 1")
    return math.exp(c_init / (1.0 - alpha))


def exp_gd_threshold_tight(c_init: float, alpha: float) -> float:
    """exp(alpha c / sqrt(1 - alpha^2)) - 1.

    Since a_t <= ln(t + 1), margin a/sqrt(a^2 + c^2) >= alpha needs
    a >= alpha c / sqrt(1 - alpha^2); so margin < alpha for every t below this.
    """
    if not c_init > 0 or not 0 < alpha < 1:
        raise ValueError("need c > 0 and 0 < alpha < 1")
    return math.exp(alpha * c_init / math.sqrt(1.0 - alpha * alpha)) - 1.0


def rate_slope(trace, metric: str, t_min: int, t_max: int) -> float:
    """Log-log slope of a trace column (e.g. ``"robust_risk"``) over [t_min, t_max]."""
    return loglog_slope(trace.column("t"), trace.column(metric), t_min, t_max)


def loglog_slope(ts: Sequence[float], values: Sequence[float], t_min: int, t_max: int) -> float:
    """Least-squares slope of log(value) against log(t) over t in [t_min, t_max]."""
    if t_min < 1 or t_max <= t_min:
        raise ValueError("need 1 <= t_min < t_max")
    ts = np.asarray(ts, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    sel = (ts >= t_min) & (ts <= t_max)
    if sel.sum() < 2:
        raise ValueError("fewer than two rows in the slope window")
    v = values[sel]
    if np.any(v <= 0):
        raise ValueError("log-log slope needs positive values")
    lx = np.log(ts[sel])
    ly = np.log(v)
    lx = lx - lx.mean()
    return float(lx @ (ly - ly.mean()) / (lx @ lx))
