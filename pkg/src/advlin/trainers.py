"""Training loops: generic adversarial training, alpha-GD, alpha-SGD,
the alpha-Perceptron and the single-example plain-GD instance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .losses import (
    Dataset,
    LabeledExample,
    Link,
    link_derivative,
    link_value,
    robust_subgradient,
    unit_direction,
)

TRACE_COLUMNS = ("t", "empirical_risk", "robust_risk", "margin", "truncated_margin", "weight_norm")


class DivergenceError(FloatingPointError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class StepSchedule:
    """Constant step ``eta``, optionally with a different first step ``eta0``."""

    eta: float
    eta0: Optional[float] = None

    def __post_init__(self):
        if not self.eta > 0 or (self.eta0 is not None and not self.eta0 > 0):
            raise ValueError("step sizes must be positive")

    @classmethod
    def constant(cls, eta: float) -> "StepSchedule":
        return cls(eta)

    @classmethod
    def with_warmup(cls, eta0: float, eta: float) -> "StepSchedule":
        return cls(eta, eta0)

    def __call__(self, t: int) -> float:
        if t == 0 and self.eta0 is not None:
            return self.eta0
        return self.eta

    def sum_from_one(self, t: int) -> float:
        """sum of eta_j for 1 <= j <= t - 1."""
        return (t - 1) * self.eta


@dataclass
class TrainTrace:
    """Per-iteration metrics; row t describes w_t before the step taken at t."""

    t: np.ndarray
    empirical_risk: np.ndarray
    robust_risk: np.ndarray
    margin: np.ndarray
    truncated_margin: np.ndarray
    weight_norm: np.ndarray
    final_model: Optional[np.ndarray] = None
    averaged: Optional["TrainTrace"] = None
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name in TRACE_COLUMNS:
            return getattr(self, name)
        return self.extra[name]

    def __len__(self):
        return len(self.t)

    @property
    def averaged_model(self):
        return None if self.averaged is None else self.averaged.final_model

    def first_margin_at_least(self, alpha: float) -> Optional[int]:
        hit = np.nonzero(self.margin >= alpha)[0]
        return int(self.t[hit[0]]) if hit.size else None


class _Recorder:
    def __init__(self, kind: Link, S: Dataset, alpha: float, capacity: int):
        self.kind, self.S, self.alpha = kind, S, alpha
        self.rows = np.empty((capacity, 6))
        self.k = 0

    def record(self, t: int, w: np.ndarray):
        m = self.S.y * (self.S.X @ w)
        nrm = float(np.linalg.norm(w))
        emp = float(np.mean(link_value(self.kind, -m)))
        rob = float(np.mean(link_value(self.kind, -m + self.alpha * nrm)))
        if nrm > 0:
            mg = float(m.min() / nrm)
            tr = max(0.0, mg)
        else:
            # margin undefined at w = 0; truncated margin shown as 0
            mg, tr = math.nan, 0.0
        self.rows[self.k] = (t, emp, rob, mg, tr, nrm)
        self.k += 1

    def record_nan(self, t: int):
        self.rows[self.k] = (t, math.nan, math.nan, math.nan, 0.0, math.nan)
        self.k += 1

    def trace(self, final_model, **kw) -> TrainTrace:
        r = self.rows[: self.k]
        return TrainTrace(
            r[:, 0].astype(np.int64), r[:, 1].copy(), r[:, 2].copy(), r[:, 3].copy(),
            r[:, 4].copy(), r[:, 5].copy(), final_model=final_model, **kw,
        )


def _check_finite(w, t):
    if not np.all(np.isfinite(w)):
        raise DivergenceError(t)


def adversarial_examples(w, S: Dataset, alpha: float, idx=None) -> Dataset:
    """The perturbed points (x - y alpha w/||w||, y) for the rows ``idx`` of S."""
    X, y = (S.X, S.y) if idx is None else (S.X[idx], S.y[idx])
    delta = -alpha * y[:, None] * unit_direction(w)[None, :]
    return Dataset(X + delta, y)


def _adv_gradient(kind: Link, w, X, y, alpha):
    # gradient of the plain loss at the perturbed points, delta held fixed
    Xa = X - alpha * y[:, None] * unit_direction(w)[None, :]
    g = link_derivative(kind, -y * (Xa @ w))
    return -((g * y) @ Xa) / len(y)


def minibatch_step(kind: Link, w, batch: Dataset, eta: float) -> np.ndarray:
    """w - eta * mean gradient of the plain loss over ``batch``."""
    g = link_derivative(kind, -batch.y * (batch.X @ w))
    return w - eta * (-((g * batch.y) @ batch.X) / batch.n)


def alpha_gd_step(w, S: Dataset, alpha: float, eta: float, kind: Link = Link.LOGISTIC) -> np.ndarray:
    if not alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    if not eta > 0:
        raise ValueError("step size must be positive")
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (S.d,):
        raise ValueError(f"dimension mismatch: w has shape {w.shape}, data has d={S.d}")
    return w - eta * _adv_gradient(kind, w, S.X, S.y, alpha)


def run_alpha_gd(S: Dataset, alpha: float, schedule: StepSchedule, T: int,
                 w0=None, kind: Link = Link.LOGISTIC) -> TrainTrace:
    if T < 1:
        raise ValueError("need T >= 1")
    if isinstance(schedule, (int, float)):
        schedule = StepSchedule.constant(schedule)
    w = np.zeros(S.d) if w0 is None else np.array(w0, dtype=np.float64)
    rec = _Recorder(kind, S, alpha, T + 1)
    for t in range(T):
        rec.record(t, w)
        w = alpha_gd_step(w, S, alpha, schedule(t), kind)
        _check_finite(w, t + 1)
    rec.record(T, w)
    return rec.trace(w)


def run_alpha_sgd(S: Dataset, alpha: float, eta: float, T: int, seed: int,
                  w0=None, kind: Link = Link.LOGISTIC) -> TrainTrace:
    """Single-sample adversarial SGD; also tracks the running average of w_0..w_{t-1}."""
    if T < 1:
        raise ValueError("need T >= 1")
    if not eta > 0:
        raise ValueError("step size must be positive")
    rng = np.random.default_rng(seed)
    w = np.zeros(S.d) if w0 is None else np.array(w0, dtype=np.float64)
    avg = np.zeros(S.d)
    rec = _Recorder(kind, S, alpha, T + 1)
    rec_avg = _Recorder(kind, S, alpha, T + 1)
    idx = rng.integers(0, S.n, size=T)
    for t in range(T):
        rec.record(t, w)
        if t == 0:
            rec_avg.record_nan(0)
        else:
            rec_avg.record(t, avg)
        avg = avg + (w - avg) / (t + 1)
        i = idx[t]
        w = w - eta * _adv_gradient(kind, w, S.X[i:i + 1], S.y[i:i + 1], alpha)
        _check_finite(w, t + 1)
    rec.record(T, w)
    rec_avg.record(T, avg)
    return rec.trace(w, averaged=rec_avg.trace(avg), extra={"sample_index": np.append(idx, -1)})


@dataclass(frozen=True)
class PerceptronReport:
    final_model: np.ndarray
    nonzero_updates: int
    epochs: int
    terminated: bool


def run_alpha_perceptron(S: Dataset, alpha: float, max_epochs: int = 1000,
                         order: str = "cyclic", seed: int = 0) -> PerceptronReport:
    """Adversarial Perceptron: on y<w,x> - alpha||w|| <= 0 add y x - alpha w/||w||.

    ``order="cyclic"`` sweeps S in index order and stops after a pass with no
    update.  ``order="uniform"`` draws n indices uniformly per epoch and stops
    once no example of S meets the update condition.
    """
    if not alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    if order not in ("cyclic", "uniform"):
        raise ValueError(f"unknown order {order!r}")
    rng = np.random.default_rng(seed)
    w = np.zeros(S.d)
    updates = 0
    for epoch in range(1, max_epochs + 1):
        visit = range(S.n) if order == "cyclic" else rng.integers(0, S.n, size=S.n)
        changed = False
        for i in visit:
            e = LabeledExample(S.X[i], S.y[i])
            if e.y * (w @ e.x) - alpha * np.linalg.norm(w) <= 0:
                w = w - robust_subgradient(Link.RELU, w, e, alpha)
                updates += 1
                changed = True
        if order == "cyclic":
            done = not changed
        else:
            done = bool(np.all(S.y * (S.X @ w) - alpha * np.linalg.norm(w) > 0))
        if done:
            return PerceptronReport(w, updates, epoch, True)
    return PerceptronReport(w, updates, max_epochs, False)


def run_slow_gd_instance(c: float, alpha: float, T: int, atol: float = 1e-12) -> TrainTrace:
    """Plain GD (eta = 1, logistic) on the single example ((1, 0), +1) from (0, c).

    The iterate is checked against the scalar recursion
    a_{t+1} = a_t + 1 / (1 + e^{a_t}) at every step; ``extra["a"]`` holds a_t.
    ``alpha`` only sets the robust-risk column.
    """
    if not c > 0 or not 0 < alpha < 1:
        raise ValueError("need c > 0 and 0 < alpha < 1")
    S = Dataset(np.array([[1.0, 0.0]]), np.array([1.0]))
    w = np.array([0.0, c])
    a = 0.0
    rec = _Recorder(Link.LOGISTIC, S, alpha, T + 1)
    a_hist = np.empty(T + 1)
    for t in range(T + 1):
        if abs(w[0] - a) > atol or w[1] != c:
            raise AssertionError(f"iterate {w} left the recursion (a={a}) at t={t}")
        rec.record(t, w)
        a_hist[t] = a
        if t == T:
            break
        w = minibatch_step(Link.LOGISTIC, w, S, 1.0)
        a = a + 1.0 / (1.0 + math.exp(a))
    return rec.trace(w, extra={"a": a_hist})


# -- generic loop ---------------------------------------------------------------

UpdateRule = Callable[[int, np.ndarray, Dataset, Dataset, Optional[list]], np.ndarray]


def full_batch(t, S, rng):
    return np.arange(S.n)


def uniform_single(t, S, rng):
    return rng.integers(0, S.n, size=1)


def gradient_rule(schedule: StepSchedule, kind: Link = Link.LOGISTIC) -> UpdateRule:
    """Mini-batch SGD on the current adversarial batch only."""
    if isinstance(schedule, (int, float)):
        schedule = StepSchedule.constant(schedule)

    def rule(t, w, S, batch, history):
        return minibatch_step(kind, w, batch, schedule(t))

    return rule


def run_generic_adversarial_training(S: Dataset, alpha: float, update_rule: UpdateRule,
                                     subset_selector=full_batch, T: int = 100,
                                     keep_history: bool = False, w0=None, seed: int = 0,
                                     kind: Link = Link.LOGISTIC):
    """Adversarial training with pluggable subset selection and update rule.

    At each t: choose rows of S, perturb each to the worst case in the
    alpha-ball around it, optionally append the perturbed points to the
    history, then ``w = update_rule(t, w, S, batch, history)``.  Returns the
    trace and the list of accumulated adversarial examples (empty unless
    ``keep_history``).
    """
    rng = np.random.default_rng(seed)
    w = np.zeros(S.d) if w0 is None else np.array(w0, dtype=np.float64)
    rec = _Recorder(kind, S, alpha, T + 1)
    history: list = []
    for t in range(T):
        rec.record(t, w)
        idx = subset_selector(t, S, rng)
        batch = adversarial_examples(w, S, alpha, idx)
        if keep_history:
            history.extend(batch)
        w = np.asarray(update_rule(t, w, S, batch, history if keep_history else None), dtype=np.float64)
        _check_finite(w, t + 1)
    rec.record(T, w)
    return rec.trace(w), history
