import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advlin.data import two_point_dataset
from conftest import planted_dataset
from advlin.losses import Dataset, Link, robust_risk, robust_risk_gradient
from advlin.metrics import gd_bound, gd_step_cap, margin, perceptron_update_bound
from advlin.trainers import (
    TRACE_COLUMNS,
    DivergenceError,
    StepSchedule,
    adversarial_examples,
    alpha_gd_step,
    full_batch,
    gradient_rule,
    run_alpha_gd,
    run_alpha_perceptron,
    run_alpha_sgd,
    run_generic_adversarial_training,
    run_slow_gd_instance,
    uniform_single,
)


def test_step_schedule():
    s = StepSchedule.with_warmup(1.0, 0.2)
    assert (s(0), s(1), s(7)) == (1.0, 0.2, 0.2)
    assert s.sum_from_one(11) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        StepSchedule.constant(0.0)


def test_alpha_gd_single_step(pair):
    # at w = 0 the perturbation vanishes; both points contribute f'(0) = 1/2
    np.testing.assert_array_equal(alpha_gd_step(np.zeros(2), pair, 0.5, 1.0), [0.5, 0.0])
    # from w = (1, 0): each robust argument is -1 + 0.5 and each perturbed point is (1 - 0.5) y e_1
    w1 = alpha_gd_step(np.array([1.0, 0.0]), pair, 0.5, 1.0)
    np.testing.assert_allclose(w1, [1.0 + 0.5 / (1 + math.exp(0.5)), 0.0], rtol=1e-15)


def test_alpha_gd_step_validation(pair):
    with pytest.raises(ValueError):
        alpha_gd_step(np.zeros(3), pair, 0.5, 1.0)
    with pytest.raises(ValueError):
        alpha_gd_step(np.zeros(2), pair, -0.1, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.9), st.floats(1e-3, 2.0))
def test_alpha_gd_is_gd_on_robust_risk(seed, alpha, eta):
    rng = np.random.default_rng(seed)
    S = Dataset(rng.standard_normal((8, 3)), rng.choice([-1.0, 1.0], 8))
    w = rng.standard_normal(3)
    np.testing.assert_allclose(alpha_gd_step(w, S, alpha, eta),
                               w - eta * robust_risk_gradient(Link.LOGISTIC, w, S, alpha), rtol=1e-12, atol=1e-14)


def test_adversarial_examples_shift_against_label(pair):
    adv = adversarial_examples(np.array([2.0, 0.0]), pair, 0.25)
    np.testing.assert_allclose(adv.X, [[0.75, 0.0], [-0.75, 0.0]])
    np.testing.assert_array_equal(adv.y, pair.y)


def test_run_alpha_gd_trace_layout(pair):
    tr = run_alpha_gd(pair, 0.5, 0.2, 10)
    assert len(tr) == 11
    np.testing.assert_array_equal(tr.t, np.arange(11))
    assert tuple(TRACE_COLUMNS) == ("t", "empirical_risk", "robust_risk", "margin", "truncated_margin", "weight_norm")
    assert math.isnan(tr.margin[0]) and tr.truncated_margin[0] == 0.0
    assert tr.robust_risk[0] == pytest.approx(math.log(2))
    assert tr.weight_norm[-1] == pytest.approx(np.linalg.norm(tr.final_model))


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.75])
def test_alpha_gd_envelope_and_descent_on_two_point(frac):
    S = two_point_dataset(1.0, 4)
    alpha = frac
    eta = gd_step_cap(1.0, alpha)
    tr = run_alpha_gd(S, alpha, eta, 800)
    ts = np.arange(2, 801)
    assert np.all(tr.robust_risk[2:] <= [gd_bound(t, 1.0, alpha, eta) for t in ts])
    assert np.all(np.diff(tr.robust_risk) <= 1e-12)
    assert tr.margin[-1] >= alpha


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_divergence_raises():
    S = Dataset(np.array([[1e308, 0.0]]), np.array([-1.0]))
    with pytest.raises(DivergenceError) as info:
        run_alpha_gd(S, 0.0, 10.0, 50, w0=np.array([1.0, 0.0]))
    assert info.value.iteration == 1


def test_sgd_is_seeded_and_averages():
    S = two_point_dataset(0.5, 3)
    a = run_alpha_sgd(S, 0.25, 0.5, 200, seed=11)
    b = run_alpha_sgd(S, 0.25, 0.5, 200, seed=11)
    c = run_alpha_sgd(S, 0.25, 0.5, 200, seed=12)
    for col in TRACE_COLUMNS:
        np.testing.assert_array_equal(a.column(col), b.column(col))
    assert not np.array_equal(a.extra["sample_index"], c.extra["sample_index"])
    # replay the sampled indices to recover w_0..w_{T-1} and their mean
    w = np.zeros(3)
    ws = []
    for i in a.extra["sample_index"][:-1]:
        ws.append(w)
        w = alpha_gd_step(w, Dataset(S.X[i:i + 1], S.y[i:i + 1]), 0.25, 0.5)
    np.testing.assert_allclose(a.final_model, w, rtol=1e-12)
    np.testing.assert_allclose(a.averaged_model, np.mean(ws, axis=0), rtol=1e-10, atol=1e-14)
    assert a.averaged.robust_risk[-1] == pytest.approx(robust_risk(Link.LOGISTIC, np.mean(ws, axis=0), S, 0.25))


def test_slow_gd_recursion():
    tr = run_slow_gd_instance(5.0, 0.5, 200)
    a = tr.extra["a"]
    assert a[1] == 0.5
    assert a[2] == pytest.approx(0.8775406687981454, rel=1e-15)
    assert np.all(a <= np.log(np.arange(201) + 1) + 1e-12)
    assert np.all(tr.final_model[1] == 5.0)


def test_perceptron_mistake_bound():
    rng = np.random.default_rng(3)
    for _ in range(20):
        gamma = rng.uniform(0.1, 0.5)
        S = planted_dataset(rng, 30, 5, gamma)
        alpha = gamma / 2
        for order in ("cyclic", "uniform"):
            rep = run_alpha_perceptron(S, alpha, order=order, seed=1)
            assert rep.terminated
            assert rep.nonzero_updates <= perceptron_update_bound(gamma, alpha)
            assert margin(rep.final_model, S).margin >= alpha


def test_perceptron_validation(pair):
    with pytest.raises(ValueError):
        run_alpha_perceptron(pair, 0.1, order="random")


def test_generic_full_batch_matches_alpha_gd():
    S = two_point_dataset(0.5, 3)
    ref = run_alpha_gd(S, 0.25, 0.3, 60)
    tr, hist = run_generic_adversarial_training(S, 0.25, gradient_rule(0.3), full_batch, T=60)
    for col in TRACE_COLUMNS:
        np.testing.assert_array_equal(tr.column(col), ref.column(col))
    assert hist == []


def test_generic_history_accumulates():
    S = two_point_dataset(0.5, 3)
    seen = []

    def rule(t, w, S, batch, history):
        seen.append(len(history))
        return w + batch.y[0] * batch.X[0]

    tr, hist = run_generic_adversarial_training(S, 0.25, rule, uniform_single, T=7, keep_history=True, seed=5)
    assert seen == list(range(1, 8))
    assert len(hist) == 7
    for e in hist:
        assert np.linalg.norm(e.x) <= 1.0 + 0.25 + 1e-12


def test_alpha_gd_escapes_bad_start_faster_than_plain_gd():
    # single example ((1, 0), +1) from (0, 10): plain GD needs hundreds of steps to reach margin 1/2
    S = Dataset(np.array([[1.0, 0.0]]), np.array([1.0]))
    w0 = np.array([0.0, 10.0])
    adv = run_alpha_gd(S, 0.5, 1.0, 2000, w0=w0).first_margin_at_least(0.5)
    plain = run_alpha_gd(S, 0.0, 1.0, 2000, w0=w0).first_margin_at_least(0.5)
    assert (adv, plain) == (6, 324)
    assert plain >= 10 * adv
