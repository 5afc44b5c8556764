"""Worst-case ERM adversary: spherical codes and the admissible-sequence game.

The learner picks any separator of the data seen so far.  Using a spherical
code ``v_1, v_2, ...`` in dimension d-1 with pairwise inner products below
``code_threshold(gamma, alpha, eps)``, the models

    w_t = (eps/gamma, sqrt(1 - (eps/gamma)^2) * v_t)

all separate the two-point set and every earlier adversarial example while
keeping margin exactly eps on the original data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .losses import Dataset, LabeledExample, adversarial_perturbation
from .metrics import margin


@dataclass(frozen=True)
class SphericalCode:
    dim: int
    threshold: float
    codewords: np.ndarray  # (size, dim)
    attempts: int = 0

    @property
    def size(self) -> int:
        return self.codewords.shape[0]


@dataclass(frozen=True)
class CodeVerdict:
    ok: bool
    pair: Optional[tuple] = None
    value: Optional[float] = None

    def __bool__(self):
        return self.ok


class CodeShortfall(RuntimeError):
    def __init__(self, code: SphericalCode, target: int):
        super().__init__(
            f"accepted {code.size} of {target} codewords in {code.attempts} attempts "
            f"(dim={code.dim}, threshold={code.threshold})"
        )
        self.code = code
        self.target = target


@dataclass(frozen=True)
class GameParams:
    d: int
    gamma: float
    alpha: float
    eps: float

    def __post_init__(self):
        if not 0 < self.eps <= self.alpha < self.gamma <= 1:
            raise ValueError("need 0 < eps <= alpha < gamma <= 1")
        if self.d < 2:
            raise ValueError("need d >= 2")


@dataclass
class GameState:
    S: Dataset
    S_prime: list = field(default_factory=list)
    models: list = field(default_factory=list)
    margins_on_S: list = field(default_factory=list)
    min_signed: list = field(default_factory=list)
    admissible: bool = True
    code_size: int = 0
    truncated: bool = False
    failure: Optional[str] = None

    @property
    def rounds(self) -> int:
        return len(self.models)

    def summary(self) -> dict:
        ms = self.margins_on_S
        return {
            "rounds": self.rounds,
            "admissible": self.admissible,
            "min_margin_on_S": min(ms) if ms else None,
            "max_margin_on_S": max(ms) if ms else None,
            "code_size": self.code_size,
            "truncated": self.truncated,
            "adversarial_examples": len(self.S_prime),
        }


def code_threshold(gamma: float, alpha: float, eps: float) -> float:
    if not 0 < eps <= alpha < gamma:
        raise ValueError("need 0 < eps <= alpha < gamma")
    return eps * (gamma ** 2 - eps * alpha) / (alpha * (gamma ** 2 - eps ** 2))


def verify_code(code: SphericalCode, norm_tol: float = 1e-12) -> CodeVerdict:
    V = np.asarray(code.codewords, dtype=np.float64)
    norms = np.linalg.norm(V, axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > norm_tol)[0]
    if bad.size:
        i = int(bad[0])
        return CodeVerdict(False, (i, i), float(norms[i]))
    G = V @ V.T
    iu = np.triu_indices(V.shape[0], k=1)
    viol = np.nonzero(G[iu] >= code.threshold)[0]
    if viol.size:
        k = viol[0]
        i, j = int(iu[0][k]), int(iu[1][k])
        return CodeVerdict(False, (i, j), float(G[i, j]))
    return CodeVerdict(True)


def generate_spherical_code(dim: int, theta: float, target_size: int, seed: int = 0,
                            max_attempts: int = 100_000, strict: bool = True) -> SphericalCode:
    """Greedy rejection sampling of uniformly random unit vectors.

    A draw is kept iff its inner product with every kept codeword is below
    ``theta``.  With ``strict`` a shortfall raises :class:`CodeShortfall`
    (carrying the partial code); otherwise the partial code is returned.
    """
    if dim < 2 or not 0 < theta < 1 or target_size < 1:
        raise ValueError("need dim >= 2, 0 < theta < 1, target_size >= 1")
    rng = np.random.default_rng(seed)
    kept = np.empty((target_size, dim))
    k = 0
    attempts = 0
    while k < target_size and attempts < max_attempts:
        attempts += 1
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        if k == 0 or np.max(kept[:k] @ v) < theta:
            kept[k] = v
            k += 1
    code = SphericalCode(dim, theta, kept[:k].copy(), attempts)
    assert verify_code(code), "rejection sampler produced an invalid code"
    if k < target_size and strict:
        raise CodeShortfall(code, target_size)
    return code


def admissible_model(params: GameParams, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (params.d - 1,):
        raise ValueError(f"codeword must have dimension d-1 = {params.d - 1}")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("codeword must be a unit vector")
    a = params.eps / params.gamma
    return np.concatenate(([a], math.sqrt(1.0 - a * a) * v))


def two_point_instance(gamma: float, d: int) -> Dataset:
    X = np.zeros((2, d))
    X[0, 0], X[1, 0] = gamma, -gamma
    return Dataset(X, np.array([1.0, -1.0]))


def run_erm_game(params: GameParams, T: int, seed: int = 0, max_attempts: int = 100_000,
                 margin_tol: float = 1e-9) -> GameState:
    """Play T rounds of adversarial training against the code-driven ERM learner.

    Round t: the learner's model w_t must strictly separate S and every
    adversarial example produced in rounds < t; then the adversary adds the
    worst-case perturbations of S for w_t.  If the code falls short of T the
    game is truncated and ``truncated`` is set.
    """
    if T < 1:
        raise ValueError("need T >= 1")
    theta = code_threshold(params.gamma, params.alpha, params.eps)
    code = generate_spherical_code(params.d - 1, theta, T, seed, max_attempts, strict=False)
    S = two_point_instance(params.gamma, params.d)
    state = GameState(S=S, code_size=code.size, truncated=code.size < T)
    if state.truncated:
        state.failure = f"code has {code.size} < {T} codewords"
    seen_X = [S.X]
    seen_y = [S.y]
    for t in range(code.size):
        w = admissible_model(params, code.codewords[t])
        X = np.concatenate(seen_X)
        yv = np.concatenate(seen_y)
        signed = yv * (X @ w)
        m = margin(w, S).margin
        state.models.append(w)
        state.margins_on_S.append(m)
        state.min_signed.append(float(signed.min()))
        if not np.all(signed > 0):
            state.admissible = False
            state.failure = state.failure or f"round {t}: model fails to separate S and earlier examples"
        if abs(m - params.eps) > margin_tol:
            state.admissible = False
            state.failure = state.failure or f"round {t}: margin on S {m} != eps"
        # adversary's move
        for e in S:
            delta = adversarial_perturbation(w, e, params.alpha)
            adv = LabeledExample(e.x + delta, e.y)
            state.S_prime.append(adv)
            seen_X.append(adv.x[None, :])
            seen_y.append(np.array([adv.y]))
    return state


def erm_lower_bound_iters(d: int, gamma: float, eps: float, c: float = 1.0) -> float:
    """(1/2) exp(c (d-1) eps^2 / (gamma + eps)^2); c is an unspecified universal constant."""
    return 0.5 * math.exp(c * (d - 1) * eps ** 2 / (gamma + eps) ** 2)
