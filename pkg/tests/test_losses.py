import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advlin.losses import (
    Dataset,
    LabeledExample,
    Link,
    adversarial_perturbation,
    empirical_risk,
    link_derivative,
    link_value,
    pointwise_loss,
    robust_pointwise_loss,
    robust_risk,
    robust_risk_gradient,
    robust_subgradient,
)

L, R = Link.LOGISTIC, Link.RELU

# ln(1 + e^u) evaluated with mpmath at 40 digits
SOFTPLUS_M05 = 0.47407698418010668
SOFTPLUS_M1 = 0.31326168751822283
SOFTPLUS_5 = 5.0067153484891181


def ex(x, y):
    return LabeledExample(np.array(x, dtype=float), y)


def ball_samples(rng, d, radius, k):
    """k points in the closed ball; half of them on the boundary sphere."""
    u = rng.standard_normal((k, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = np.ones(k)
    r[k // 2:] = rng.uniform(0, 1, k - k // 2) ** (1.0 / d)
    return radius * r[:, None] * u


def brute_force_robust(kind, w, e, alpha, rng, k=100_000):
    deltas = ball_samples(rng, e.x.size, alpha, k)
    return float(np.max(link_value(kind, -e.y * ((e.x + deltas) @ w))))


# -- link functions ---------------------------------------------------------------

def test_link_value_examples():
    assert link_value(L, 0.0) == pytest.approx(math.log(2), abs=1e-15)
    assert link_value(L, 1000.0) == 1000.0
    assert link_value(L, -0.5) == pytest.approx(SOFTPLUS_M05, abs=1e-15)
    assert link_value(R, -3.0) == 0.0


def test_link_derivative_examples():
    assert link_derivative(L, 0.0) == 0.5
    with np.errstate(over="raise"):
        assert link_derivative(L, -1000.0) == 0.0
        assert link_derivative(L, 1000.0) == 1.0
    assert link_derivative(R, 0.3) == 1.0
    assert link_derivative(R, 0.0) == 1.0
    assert link_derivative(R, -0.1) == 0.0


@given(st.floats(-1e6, 1e6))
def test_softplus_stable_identity(u):
    v = link_value(L, u)
    assert math.isfinite(v) and v >= 0
    # numpy and libm exp may differ by an ulp
    assert v == pytest.approx(max(u, 0.0) + math.log1p(math.exp(-abs(u))), rel=1e-15, abs=1e-300)


@given(st.floats(-30, 30))
def test_logistic_derivative_matches_sigmoid(u):
    assert link_derivative(L, u) == pytest.approx(1 / (1 + math.exp(-u)), rel=1e-14)


# -- pointwise losses --------------------------------------------------------------

def test_pointwise_loss_examples():
    assert pointwise_loss(L, np.zeros(2), ex([3.0, -1.0], -1)) == pytest.approx(math.log(2), abs=1e-15)
    assert pointwise_loss(L, np.array([1.0, 0.0]), ex([1, 0], 1)) == pytest.approx(SOFTPLUS_M1, abs=1e-15)
    assert pointwise_loss(R, np.array([1.0, 0.0]), ex([1, 0], 1)) == 0.0


def test_pointwise_loss_dimension_mismatch():
    with pytest.raises(ValueError):
        pointwise_loss(L, np.zeros(3), ex([1, 0], 1))


def test_label_validation():
    with pytest.raises(ValueError):
        ex([1, 0], 0)
    with pytest.raises(ValueError):
        LabeledExample(np.array([np.nan, 1.0]), 1)


def test_robust_loss_examples_against_brute_force():
    rng = np.random.default_rng(0)
    assert robust_pointwise_loss(L, np.zeros(2), ex([5, 5], 1), 0.5) == pytest.approx(math.log(2), abs=1e-15)

    w, e = np.array([1.0, 0.0]), ex([1, 0], 1)
    closed = robust_pointwise_loss(L, w, e, 0.5)
    assert closed == pytest.approx(SOFTPLUS_M05, abs=1e-15)
    sampled = brute_force_robust(L, w, e, 0.5, rng)
    assert sampled <= closed <= sampled + 1e-4
    d_star = adversarial_perturbation(w, e, 0.5)
    assert pointwise_loss(L, w, LabeledExample(e.x + d_star, e.y)) == pytest.approx(closed, rel=1e-15)

    w, e = np.array([3.0, 4.0]), ex([0, 0], 1)
    closed = robust_pointwise_loss(L, w, e, 1.0)
    assert closed == pytest.approx(SOFTPLUS_5, abs=1e-14)
    sampled = brute_force_robust(L, w, e, 1.0, rng)
    assert sampled <= closed <= sampled + 1e-4


def test_robust_loss_negative_alpha():
    with pytest.raises(ValueError):
        robust_pointwise_loss(L, np.ones(2), ex([1, 0], 1), -0.1)


def test_adversarial_perturbation_examples():
    np.testing.assert_allclose(adversarial_perturbation(np.array([3.0, 4.0]), ex([0, 0], 1), 1.0), [-0.6, -0.8],
                               rtol=0, atol=1e-16)
    assert np.array_equal(adversarial_perturbation(np.zeros(2), ex([1, 1], 1), 0.5), [0.0, 0.0])
    np.testing.assert_allclose(adversarial_perturbation(np.array([1.0, 0.0]), ex([2, 2], -1), 0.25), [0.25, 0.0])


def central_diff(fn, w, h=1e-6):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (fn(w + e) - fn(w - e)) / (2 * h)
    return g


def test_robust_subgradient_examples():
    np.testing.assert_array_equal(robust_subgradient(L, np.zeros(2), ex([1, 0], 1), 0.5), [-0.5, 0.0])

    w, e = np.array([1.0, 0.0]), ex([1, 0], 1)
    g = robust_subgradient(L, w, e, 0.5)
    np.testing.assert_allclose(g, [-0.18877033439907272, 0.0], rtol=1e-14)
    fd = central_diff(lambda v: robust_pointwise_loss(L, v, e, 0.5), w)
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-10)

    assert np.array_equal(robust_subgradient(R, np.array([1.0, 0.0]), ex([-1, 0], -1), 0.5), [0.0, 0.0])


def test_risks(pair):
    assert empirical_risk(L, np.zeros(2), pair) == pytest.approx(math.log(2), abs=1e-15)
    assert robust_risk(L, np.zeros(2), pair, 0.75) == pytest.approx(math.log(2), abs=1e-15)
    assert empirical_risk(L, np.array([1.0, 0.0]), pair) == pytest.approx(SOFTPLUS_M1, abs=1e-15)
    assert robust_risk(L, np.array([1.0, 0.0]), pair, 0.5) == pytest.approx(SOFTPLUS_M05, abs=1e-15)
    assert empirical_risk(R, np.array([2.0, 1.0]), pair) == 0.0


def test_alpha_zero_reduces_bitwise():
    rng = np.random.default_rng(1)
    for _ in range(50):
        S = Dataset(rng.standard_normal((7, 3)), rng.choice([-1.0, 1.0], 7))
        w = rng.standard_normal(3)
        assert robust_risk(L, w, S, 0.0) == empirical_risk(L, w, S)


def test_dataset_is_immutable_and_checked(pair):
    with pytest.raises(ValueError):
        pair.X[0, 0] = 5.0
    assert pair.max_norm == 1.0
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.array([1.0, 2.0]))


def test_robust_risk_gradient_is_mean_of_subgradients():
    rng = np.random.default_rng(2)
    S = Dataset(rng.standard_normal((9, 4)), rng.choice([-1.0, 1.0], 9))
    w = rng.standard_normal(4)
    mean = np.mean([robust_subgradient(L, w, e, 0.3) for e in S], axis=0)
    np.testing.assert_allclose(robust_risk_gradient(L, w, S, 0.3), mean, rtol=1e-13, atol=1e-15)


# -- properties ------------------------------------------------------------------

vec = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.sampled_from([1, -1]), st.floats(0.01, 0.99), st.integers(0, 2 ** 32 - 1))
def test_oracle_dominance(w, x, y, alpha, seed):
    if np.linalg.norm(w) < 1e-3:
        w = w + np.array([1.0, 0.0, 0.0])
    e = LabeledExample(x, y)
    closed = robust_pointwise_loss(L, w, e, alpha)
    deltas = ball_samples(np.random.default_rng(seed), 3, alpha, 2000)
    assert np.all(link_value(L, -y * ((x + deltas) @ w)) <= closed + 1e-12)
    d_star = adversarial_perturbation(w, e, alpha)
    assert np.linalg.norm(d_star) <= alpha * (1 + 1e-15)
    assert pointwise_loss(L, w, LabeledExample(x + d_star, y)) == pytest.approx(closed, rel=1e-12, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.sampled_from([1, -1]), st.floats(0.0, 1.0))
def test_gradient_matches_finite_differences(w, x, y, alpha):
    if np.linalg.norm(w) < 0.1:
        w = w + np.array([0.0, 0.5, 0.0])
    e = LabeledExample(x, y)
    g = robust_subgradient(L, w, e, alpha)
    fd = central_diff(lambda v: robust_pointwise_loss(L, v, e, alpha), w)
    scale = max(np.abs(g).max(), 1e-3)
    assert np.all(np.abs(g - fd) <= 1e-5 * scale)


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec, st.sampled_from([1, -1]), st.floats(0.0, 1.0), st.sampled_from([L, R]))
def test_convexity(w1, w2, x, y, alpha, kind):
    e = LabeledExample(x, y)
    mid = robust_pointwise_loss(kind, (w1 + w2) / 2, e, alpha)
    ends = 0.5 * robust_pointwise_loss(kind, w1, e, alpha) + 0.5 * robust_pointwise_loss(kind, w2, e, alpha)
    assert mid <= ends + 1e-12


@given(vec, vec, st.sampled_from([1, -1]), st.floats(0, 1), st.floats(0, 1), st.sampled_from([L, R]))
def test_monotone_in_alpha(w, x, y, a1, a2, kind):
    a1, a2 = sorted((a1, a2))
    e = LabeledExample(x, y)
    assert robust_pointwise_loss(kind, w, e, a1) <= robust_pointwise_loss(kind, w, e, a2)
