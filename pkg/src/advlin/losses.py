"""Link functions, pointwise and robust losses for linear classifiers.

The robust loss of a linear model against an l2 ball of radius ``alpha`` has
the closed form ``f(-y<w, x> + alpha * ||w||)``; everything here is built on
that identity.  Dataset-level functions are vectorised over the rows of
``Dataset.X``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class Link(enum.Enum):
    LOGISTIC = "logistic"
    RELU = "relu"


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("feature vector must be 1-d and non-empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("feature vector has non-finite entries")
        if self.y not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.y!r}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))


@dataclass(frozen=True)
class Dataset:
    """Immutable labelled sample: rows of ``X`` with labels ``y`` in {+1, -1}."""

    X: np.ndarray
    y: np.ndarray
    max_norm: float = field(init=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.float64, copy=True)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("dataset needs at least one example with d >= 1")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must be a vector with one entry per row")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ValueError("labels must be +1 or -1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "max_norm", float(np.linalg.norm(X, axis=1).max()))

    @classmethod
    def from_examples(cls, examples) -> "Dataset":
        examples = list(examples)
        if not examples:
            raise ValueError("empty dataset")
        return cls(np.stack([e.x for e in examples]), np.array([e.y for e in examples]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.n

    def __iter__(self) -> Iterator[LabeledExample]:
        for x, y in zip(self.X, self.y):
            yield LabeledExample(x, y)

    def __getitem__(self, i) -> LabeledExample:
        return LabeledExample(self.X[i], self.y[i])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)

    __hash__ = None


def _check_alpha(alpha):
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")


def _check_dim(w, d):
    if w.shape != (d,):
        raise ValueError(f"dimension mismatch: w has shape {w.shape}, data has d={d}")


def link_value(kind: Link, u):
    """f(u); softplus is evaluated as max(u, 0) + log1p(exp(-|u|))."""
    u = np.asarray(u, dtype=np.float64)
    if kind is Link.LOGISTIC:
        out = np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))
    elif kind is Link.RELU:
        out = np.maximum(u, 0.0)
    else:
        raise ValueError(f"unknown link {kind!r}")
    return float(out) if out.ndim == 0 else out


def link_derivative(kind: Link, u):
    """f'(u). For ReLU the subderivative at 0 is taken to be 1."""
    u = np.asarray(u, dtype=np.float64)
    if kind is Link.LOGISTIC:
        # sigmoid without overflow on either tail
        e = np.exp(-np.abs(u))
        out = np.where(u >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    elif kind is Link.RELU:
        out = (u >= 0).astype(np.float64)
    else:
        raise ValueError(f"unknown link {kind!r}")
    return float(out) if out.ndim == 0 else out


def unit_direction(w: np.ndarray) -> np.ndarray:
    """w / ||w||, or the zero vector at w = 0."""
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        return np.zeros_like(w, dtype=np.float64)
    return w / nrm


def pointwise_loss(kind: Link, w, e: LabeledExample) -> float:
    w = np.asarray(w, dtype=np.float64)
    _check_dim(w, e.x.size)
    return link_value(kind, -e.y * float(w @ e.x))


def robust_pointwise_loss(kind: Link, w, e: LabeledExample, alpha: float) -> float:
    """Worst-case loss over perturbations ``||delta|| <= alpha``, in closed form."""
    _check_alpha(alpha)
    w = np.asarray(w, dtype=np.float64)
    _check_dim(w, e.x.size)
    return link_value(kind, -e.y * float(w @ e.x) + alpha * float(np.linalg.norm(w)))


def adversarial_perturbation(w, e: LabeledExample, alpha: float) -> np.ndarray:
    """Maximiser of the loss over the alpha-ball: ``-y * alpha * w / ||w||``.

    At w = 0 every delta is a maximiser; the zero vector is returned.
    """
    _check_alpha(alpha)
    w = np.asarray(w, dtype=np.float64)
    _check_dim(w, e.x.size)
    return -e.y * alpha * unit_direction(w)


def robust_subgradient(kind: Link, w, e: LabeledExample, alpha: float) -> np.ndarray:
    _check_alpha(alpha)
    w = np.asarray(w, dtype=np.float64)
    _check_dim(w, e.x.size)
    u = -e.y * float(w @ e.x) + alpha * float(np.linalg.norm(w))
    return link_derivative(kind, u) * (-e.y * e.x + alpha * unit_direction(w))


# -- dataset-level (vectorised) ------------------------------------------------

def margins_unnormalised(w, S: Dataset) -> np.ndarray:
    """y_i <w, x_i> for every row."""
    w = np.asarray(w, dtype=np.float64)
    _check_dim(w, S.d)
    return S.y * (S.X @ w)


def robust_arguments(w, S: Dataset, alpha: float) -> np.ndarray:
    """Per-example link argument -y<w,x> + alpha ||w||."""
    _check_alpha(alpha)
    return -margins_unnormalised(w, S) + alpha * np.linalg.norm(w)


def empirical_risk(kind: Link, w, S: Dataset) -> float:
    if S.n == 0:
        raise ValueError("empty dataset")
    return float(np.mean(link_value(kind, -margins_unnormalised(w, S))))


def robust_risk(kind: Link, w, S: Dataset, alpha: float) -> float:
    if S.n == 0:
        raise ValueError("empty dataset")
    return float(np.mean(link_value(kind, robust_arguments(w, S, alpha))))


def robust_risk_gradient(kind: Link, w, S: Dataset, alpha: float) -> np.ndarray:
    """Mean of the per-example robust subgradients over S."""
    w = np.asarray(w, dtype=np.float64)
    g = link_derivative(kind, robust_arguments(w, S, alpha))
    # sum_i g_i (-y_i x_i + alpha w_bar) / n
    return (-(g * S.y) @ S.X + alpha * g.sum() * unit_direction(w)) / S.n
