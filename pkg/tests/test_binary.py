import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from onlineids.binary import (
    ALMA,
    AROW,
    ARCSOGD,
    BINARY_LEARNERS,
    CSOGD,
    CW,
    OGD,
    ROMMA,
    SCW,
    PassiveAggressive,
    Perceptron,
    cs_hinge_loss,
    make_binary_learner,
)
from onlineids.core import ConfigurationError, Hyperparams, NumericalError, hinge_loss
from onlineids.data import SyntheticSpec, generate_synthetic

vec3 = arrays(np.float64, 3, elements=st.floats(-10, 10, allow_nan=False))


def states_equal(a, b):
    assert a.keys() == b.keys()
    for key in a:
        assert np.array_equal(a[key], b[key]), key


def test_perceptron_examples():
    p = Perceptron(2)
    out = p.step(np.array([1.0, 2.0]), 1)
    assert (out.label, out.score, out.updated) == (-1, 0.0, True)
    assert np.array_equal(p.w, [1.0, 2.0])
    out = p.step(np.array([1.0, 2.0]), 1)
    assert not out.updated and np.array_equal(p.w, [1.0, 2.0])
    p.step(np.array([1.0, 0.0]), -1)
    assert np.array_equal(p.w, [0.0, 2.0])


def test_pa_examples():
    x = np.array([1.0, 0.0])
    hard = PassiveAggressive(2, variant="hard")
    out = hard.step(x, 1)
    assert out.loss == 1.0
    assert np.array_equal(hard.w, [1.0, 0.0])
    assert hinge_loss(hard.w, x, 1) == 0.0
    soft = PassiveAggressive(2, Hyperparams(C=0.1), variant="I")
    soft.step(x, 1)
    assert np.allclose(soft.w, [0.1, 0.0], rtol=0, atol=1e-15)
    hard.w[:] = [3.0, 0.0]
    before = hard.state()
    assert not hard.step(x, 1).updated
    states_equal(before, hard.state())


def test_pa_zero_vector_is_degenerate():
    pa = PassiveAggressive(3, variant="hard")
    out = pa.step(np.zeros(3), 1)
    assert out.loss == 1.0 and not out.updated
    assert pa.degenerate == 1 and not pa.w.any()


def _pa1_bruteforce_tau(loss, sq, C):
    taus = np.linspace(0.0, loss / sq * 1.5 + 1e-9, 200001)
    objective = 0.5 * taus ** 2 * sq + C * np.maximum(0.0, loss - taus * sq)
    return taus[np.argmin(objective)], taus[1] - taus[0]


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, st.sampled_from([-1, 1]), st.sampled_from([0.01, 0.1, 1.0, 10.0]))
def test_pa1_matches_bruteforce_line_search(w, x, y, C):
    sq = float(x @ x)
    loss = hinge_loss(w, x, y)
    if sq < 1e-3 or loss == 0:
        return
    pa = PassiveAggressive(3, Hyperparams(C=C))
    pa.w = w.copy()
    pa.step(x, y)
    tau = float((pa.w - w) @ x) / (y * sq)
    expected, h = _pa1_bruteforce_tau(loss, sq, C)
    assert tau == pytest.approx(expected, abs=2 * h)
    assert np.linalg.norm(pa.w - w) <= C * math.sqrt(sq) * (1 + 1e-12)


def test_arow_worked_example():
    a = AROW(2, Hyperparams(gamma=1.0, cov_mode="full"))
    out = a.step(np.array([1.0, 0.0]), 1)
    assert out.loss == 1.0
    assert np.allclose(a.w, [0.5, 0.0], rtol=0, atol=1e-10)
    assert abs(a.cov[0, 0] - 0.5) <= 1e-10 and abs(a.cov[1, 1] - 1.0) <= 1e-10
    d = AROW(2, Hyperparams(gamma=1.0))
    d.step(np.array([1.0, 0.0]), 1)
    assert np.allclose(d.w, [0.5, 0.0], atol=1e-10) and np.allclose(d.cov, [0.5, 1.0], atol=1e-10)


def test_arow_large_gamma_update_vanishes():
    a = AROW(2, Hyperparams(gamma=1e9))
    a.step(np.array([1.0, 0.0]), 1)
    assert np.linalg.norm(a.w) < 1e-6


def test_arow_update_is_stationary_point_of_its_objective():
    # grad of 0.5 (mu - mu0)' inv(S0) (mu - mu0) + loss(mu)^2 / (2 gamma) vanishes at the new mean,
    # and the new covariance equals inv(inv(S0) + x x' / gamma)
    rng = np.random.default_rng(3)
    a = AROW(4, Hyperparams(gamma=0.7, cov_mode="full"))
    for _ in range(20):
        x = rng.standard_normal(4)
        y = int(rng.choice([-1, 1]))
        mu0, S0 = a.w.copy(), a.cov.copy()
        out = a.step(x, y)
        if not out.updated:
            continue
        loss_new = max(0.0, 1 - y * a.w @ x)
        grad = np.linalg.solve(S0, a.w - mu0) - (loss_new / 0.7) * y * x
        assert np.allclose(grad, 0, atol=1e-9)
        assert np.allclose(a.cov, np.linalg.inv(np.linalg.inv(S0) + np.outer(x, x) / 0.7), atol=1e-9)


def test_arow_covariance_properties_full_mode():
    rng = np.random.default_rng(11)
    a = AROW(8, Hyperparams(gamma=0.5, cov_mode="full"))
    for _ in range(300):
        x = rng.standard_normal(8)
        before = float(x @ a.cov @ x)
        a.step(x, int(rng.choice([-1, 1])))
        assert float(x @ a.cov @ x) <= before + 1e-12
        assert np.max(np.abs(a.cov - a.cov.T)) <= 1e-10
        assert np.linalg.eigvalsh(a.cov).min() >= -1e-10


def test_csogd_examples():
    learner = CSOGD(2, Hyperparams(rho=2.0, lam=0.1))
    x = np.array([0.5, 0.0])
    learner.w = np.array([1.0, 0.0])
    out = learner.step(x, 1)
    assert out.loss == pytest.approx(1.5)
    assert np.allclose(learner.w, np.array([1.0, 0.0]) + 0.1 * x)
    neg = CSOGD(2, Hyperparams(rho=2.0))
    neg.w = np.array([-2.0, 0.0])
    assert neg.step(np.array([1.0, 0.0]), -1) == (-1, -2.0, 0.0, False)


def test_cs_hinge_with_unit_rho_is_hinge():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        w, x = rng.standard_normal(5), rng.standard_normal(5)
        y = int(rng.choice([-1, 1]))
        assert cs_hinge_loss(w, x, y, 1.0) == hinge_loss(w, x, y)


def test_csogd_running_rho_tracks_class_ratio():
    learner = CSOGD(1)
    for y in (-1, -1, -1, 1):
        learner.step(np.array([0.0]), y)
    assert learner.ratio.value() == 3.0


def test_ogd_example():
    o = OGD(2, Hyperparams(lam=1.0))
    o.step(np.array([1.0, 0.0]), 1)
    assert np.array_equal(o.w, [1.0, 0.0])
    o.w[:] = 0.0
    o.step(np.array([1.0, 0.0]), 1)  # t = 2
    assert o.w[0] == pytest.approx(1 / math.sqrt(2))


def stream(n=1000, seed=0, priors=(0.8, 0.2), dim=6, noise=1.5):
    return generate_synthetic(SyntheticSpec(k=2, dim=dim, priors=list(priors), n=n,
                                            noise=noise, seed=seed))


def test_csogd_rho_one_is_ogd():
    data = stream()
    a = CSOGD(data.dim, Hyperparams(rho=1.0, lam=0.3))
    b = OGD(data.dim, Hyperparams(lam=0.3))
    for x, y in zip(data.X, data.y.tolist()):
        assert a.step(x, y) == b.step(x, y)
        assert np.array_equal(a.w, b.w)


def test_arcsogd_rho_changes_trajectory():
    data = stream(seed=4)
    finals = []
    for rho in (1.0, 2.0):
        learner = ARCSOGD(data.dim, Hyperparams(rho=rho))
        tp = fn = 0
        for x, y in zip(data.X, data.y.tolist()):
            out = learner.step(x, y)
            if y == 1:
                tp += out.label == 1
                fn += out.label != 1
        finals.append((learner.w.copy(), tp / (tp + fn)))
    assert not np.array_equal(finals[0][0], finals[1][0])
    assert finals[0][1] != finals[1][1]


def test_cw_full_update_meets_constraint_with_equality():
    rng = np.random.default_rng(2)
    cw = CW(5, Hyperparams(phi=1.3, cov_mode="full"))
    hits = 0
    for _ in range(200):
        x = rng.standard_normal(5)
        y = int(rng.choice([-1, 1]))
        if cw.step(x, y).updated:
            hits += 1
            assert y * cw.w @ x == pytest.approx(1.3 * x @ cw.cov @ x, rel=1e-9, abs=1e-12)
    assert hits > 10


def test_scw_full_update_meets_constraint_when_uncapped():
    rng = np.random.default_rng(2)
    scw = SCW(5, Hyperparams(phi=1.3, C=1e6, cov_mode="full"))
    hits = 0
    # stop before the covariance collapses to ~1e-13, where sqrt(v) loses precision
    while hits < 40:
        x = rng.standard_normal(5)
        y = int(rng.choice([-1, 1]))
        if scw.step(x, y).updated:
            hits += 1
            v = x @ scw.cov @ x
            assert y * scw.w @ x == pytest.approx(1.3 * math.sqrt(v), rel=1e-9, abs=1e-12)
    assert hits > 10


def test_scw_step_capped_by_C():
    scw = SCW(2, Hyperparams(C=0.01))
    scw.step(np.array([1.0, 0.0]), 1)
    assert scw.w[0] == pytest.approx(0.01)


def test_romma_update_hits_both_constraints():
    rng = np.random.default_rng(9)
    r = ROMMA(4)
    checked = 0
    for _ in range(200):
        x = rng.standard_normal(4)
        y = int(rng.choice([-1, 1]))
        w_old = r.w.copy()
        if r.step(x, y).updated:
            # the norm grows quickly on noisy data, so ff*ww - m*m cancels a few digits
            assert y * r.w @ x == pytest.approx(1.0, rel=1e-6)
            if w_old.any():
                checked += 1
                assert r.w @ w_old == pytest.approx(w_old @ w_old, rel=1e-6)
    assert checked > 5


def test_romma_overflow_raises_with_round():
    r = ROMMA(2)
    r.w = np.array([1e200, 1e200])
    with pytest.raises(NumericalError, match="round 1"):
        r.step(np.array([1.0, 1.0]), -1)


def test_alma_stays_in_unit_ball():
    data = stream(noise=3.0)
    a = ALMA(data.dim)
    for x, y in zip(data.X, data.y.tolist()):
        a.step(x, y)
        assert np.linalg.norm(a.w) <= 1 + 1e-12


def test_alma_first_step():
    a = ALMA(2, Hyperparams(alpha=0.5))
    a.step(np.array([3.0, 4.0]), 1)
    # eta_1 = sqrt(2); w = sqrt(2) * x / ||x||, then projected onto the unit ball
    assert np.allclose(a.w, [0.6, 0.8]) and a.k == 2


@pytest.mark.parametrize("name", ["arow", "cw", "scw", "arcsogd"])
def test_diagonal_mode_matches_full_on_axis_aligned_inputs(name):
    rng = np.random.default_rng(1)
    diag = make_binary_learner(name, 5, Hyperparams(cov_mode="diag", rho=2.0))
    full = make_binary_learner(name, 5, Hyperparams(cov_mode="full", rho=2.0))
    for _ in range(200):
        x = np.zeros(5)
        x[rng.integers(5)] = rng.standard_normal() * 2
        y = int(rng.choice([-1, 1]))
        assert diag.step(x, y).updated == full.step(x, y).updated
        assert np.allclose(diag.w, full.w, rtol=1e-12, atol=1e-14)
        assert np.allclose(diag.cov, np.diag(full.cov), rtol=1e-12, atol=1e-14)


def zero_loss_weights(x, y):
    sq = float(x @ x)
    return y * x * (10.0 * (1.0 + sq) / sq)


@pytest.mark.parametrize("name", sorted(BINARY_LEARNERS))
@settings(max_examples=40, deadline=None)
@given(x=arrays(np.float64, 4, elements=st.floats(-5, 5, allow_nan=False)), y=st.sampled_from([-1, 1]))
def test_passivity(name, x, y):
    if float(x @ x) < 1e-2:
        return
    learner = make_binary_learner(name, 4, Hyperparams(phi=1.0))
    learner.w = zero_loss_weights(x, y)
    before = learner.state()
    out = learner.step(x, y)
    assert out.loss == 0.0 and not out.updated
    states_equal(before, learner.state())


@pytest.mark.parametrize("name", sorted(BINARY_LEARNERS))
def test_zero_loss_rounds_never_change_state_on_a_stream(name):
    data = stream(n=400, noise=1.0)
    learner = make_binary_learner(name, data.dim)
    for x, y in zip(data.X, data.y.tolist()):
        before = learner.state()
        out = learner.step(x, y)
        assert out.updated == (out.loss > 0) or (out.loss > 0 and learner.degenerate)
        if out.loss == 0:
            states_equal(before, learner.state())


def separable_stream(n, margin, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(5)
    u /= np.linalg.norm(u)
    xs, ys = [], []
    while len(xs) < n:
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        if abs(u @ x) >= margin:
            xs.append(x)
            ys.append(1 if u @ x > 0 else -1)
    return np.array(xs), ys


@pytest.mark.parametrize("seed", range(5))
def test_perceptron_mistake_bound(seed):
    X, ys = separable_stream(3000, 0.2, seed)
    p = Perceptron(5)
    mistakes = 0
    for _ in range(3):
        for x, y in zip(X, ys):
            mistakes += p.step(x, y).updated
    assert mistakes <= (1.0 / 0.2) ** 2


def test_unknown_family_rejected():
    with pytest.raises(ConfigurationError):
        make_binary_learner("winnow", 3)


def test_dimension_and_label_checks():
    p = Perceptron(3)
    with pytest.raises(ValueError):
        p.step(np.ones(2), 1)
    with pytest.raises(ValueError):
        p.step(np.ones(3), 2)
