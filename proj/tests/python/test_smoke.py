"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import descentlab as dl


def quadratic(diag):
    Q = np.diag(np.asarray(diag, dtype=float))
    return dl.Problem.quadratic(Q, np.zeros(len(diag)))


def test_problem_oracles():
    prob = quadratic([1.0, 4.0])
    w = np.array([2.0, 0.0])
    assert prob.value(w) == pytest.approx(2.0)
    np.testing.assert_allclose(prob.grad(w), [2.0, 0.0])
    assert prob.constants.L == pytest.approx(4.0)
    assert prob.constants.mu == pytest.approx(1.0)


def test_gd_run_converges():
    prob = quadratic([1.0, 2.0, 3.0])
    run = dl.run_gd(prob, dl.schedule_constant(1.0 / 3.0), np.ones(3), 200)
    assert run.f[-1] < 1e-12
    assert run.counts.gradient_evals == 200


def test_prox_soft_threshold():
    spec = dl.prox_l1(1.0, 1.0)
    np.testing.assert_allclose(dl.prox(spec, np.array([2.0, -0.5])), [1.0, 0.0])
    w = np.array([2.0])
    np.testing.assert_allclose(dl.prox_via_moreau(spec, w), dl.prox(spec, w))


def test_nesterov_bound_holds():
    prob = quadratic([1.0, 2.0, 4.0])
    w0 = np.array([1.0, -1.0, 1.0])
    run = dl.run_nesterov(prob, w0, 100)
    L = prob.constants.L
    R0_sq = float(np.dot(w0, w0))
    for t, f in enumerate(run.f):
        assert f <= 2.0 * L * R0_sq / (t + 1.0) ** 2 + 1e-10
    trace = dl.certify_deterministic(run, prob, "nesterov_convex")
    assert trace.min_slack >= -1e-9


def test_unified_sgd_and_enumeration():
    comps = [(np.array([[1.0]]), np.array([-a])) for a in (0.0, 2.0, 4.0)]
    prob = dl.Problem.finite_sum_quadratic(comps)
    spec = dl.SgdDriverSpec(
        stages=0, inner=[50], estimator="minibatch", batch=1,
        step=dl.schedule_constant(0.2),
    )
    run_a = dl.run_unified_sgd(prob, spec, np.zeros(1), 7)
    run_b = dl.run_unified_sgd(prob, spec, np.zeros(1), 7)
    assert run_a.f == run_b.f  # deterministic per seed

    state = dl.EstimatorState.minibatch(1, 3, 3)
    mean = dl.enumerate_conditional_mean(state, prob, np.array([1.0]))
    np.testing.assert_allclose(mean, prob.grad(np.array([1.0])), atol=1e-12)

    trace = dl.certify_stochastic_enumerated(
        prob, spec, np.zeros(1), 4, "sgd_convex_enumerated"
    )
    assert trace.paths == 81
    assert trace.min_slack >= -1e-12


def test_fit_rate_and_bounds():
    series = [1.0 / t for t in range(1, 2001)]
    assert dl.fit_rate(series, 0.5) == pytest.approx(-1.0, abs=1e-6)
    c = quadratic([1.0]).constants
    assert dl.evaluate_bound("gd_convex", c, t=4, R0=2.0) == pytest.approx(0.5)
    assert dl.evaluate_bound("nesterov", c, t=9, R0=1.0) == pytest.approx(0.02)


def test_error_translation():
    prob = quadratic([1.0, 2.0])
    with pytest.raises(ValueError):
        prob.value(np.zeros(3))


def test_hybrid_params():
    params = dl.hybrid_default_params(1.0, 7)
    assert params.eta == pytest.approx(0.5)
    assert params.c == pytest.approx(1.0)
    assert params.beta == pytest.approx(1.0 - math.sqrt(0.5))
