from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randmax import learning, model, samplers, spaces
from randmax.errors import EmptyCandidates
from randmax.experiment import generate_data
from randmax.learning import Inference, LossForm, Objective, TrainConfig
from randmax.model import Sample
from randmax.samplers import ProposalKind
from randmax.spaces import ElemSet, Kind, Space

from conftest import SMALL_SPACES, space_id

SET42 = Space(Kind.SET, 4, 2)


def reference_loss(space, sample, w, candidates, loss_form):
    """Object-level max loss, straight from the definitions."""
    kind = model.default_distortion(space)
    vals = []
    for c in candidates:
        z = model.hamming(space, sample.x, sample.y, c) - model.margin(space, sample.x, sample.y, c, w)
        d = model.distortion(kind, space, sample.y, c)
        vals.append(d * max(0.0, 1 + z) if loss_form is LossForm.HINGE else d * (z >= 0))
    return max(vals)


def pieces(space, prep_sample, w, cand):
    """Value and gradient of every linear piece of the hinge max loss."""
    k = spaces.index_of(space, prep_sample.y)
    phi = model.feature_rows(space, prep_sample.x).astype(float)
    s = phi @ w
    h = model.hamming_row(space, prep_sample.x, k)
    d = model.distortion_row(model.default_distortion(space), space, k)
    vals = [0.0]
    grads = [np.zeros(space.ell)]
    for c in cand:
        if d[c] > 0:
            vals.append(d[c] * (1 + h[c] - s[k] + s[c]))
            grads.append(d[c] * (phi[c] - phi[k]))
    return np.array(vals), np.array(grads)


def differentiable(space, samples, w, cands, tol=1e-4):
    for smp, cand in zip(samples, cands):
        vals, grads = pieces(space, smp, w, cand)
        top = vals >= vals.max() - tol
        if not np.allclose(grads[top], grads[top][0]):
            return False
    return True


def test_hand_example():
    x = np.ones(6)
    s = Sample(x, ElemSet((0, 1)), SET42)
    w = np.zeros(6)
    cand = [ElemSet((2, 3))]
    assert learning.sample_loss(SET42, s, w, cand, LossForm.ZERO_ONE) == 1
    assert learning.sample_loss(SET42, s, w, cand, LossForm.HINGE) == 3
    cfg = TrainConfig(lam=0.01)
    assert learning.objective(SET42, [s], w, cfg, candidates=[cand]) == 3
    assert learning.sample_loss(SET42, s, w, [s.y]) == 0


def test_zero_one_never_fires_with_large_margins():
    x = np.ones(6)
    s = Sample(x, ElemSet((0, 1)), SET42)
    w = np.zeros(6)
    w[spaces.pair_index(0, 1, 4)] = 10.0
    assert learning.sample_loss(SET42, s, w, None, LossForm.ZERO_ONE) == 0


def test_empty_candidates():
    s = Sample(np.ones(6), ElemSet((0, 1)), SET42)
    with pytest.raises(EmptyCandidates):
        learning.sample_loss(SET42, s, np.zeros(6), [])


def test_subgradient_examples():
    x = np.ones(6)
    s = Sample(x, ElemSet((0, 1)), SET42)
    w = 0.1 * np.arange(6)
    cand = [ElemSet((2, 3))]
    g = learning.subgradient(SET42, s, w, cand, lam=0.5)
    want = model.feature_map(SET42, x, ElemSet((2, 3))) - model.feature_map(SET42, x, s.y) + 2 * 0.5 * w
    assert np.allclose(g, want)
    big = np.zeros(6)
    big[spaces.pair_index(0, 1, 4)] = 100.0
    assert np.allclose(learning.subgradient(SET42, s, big, cand, lam=0.5), 2 * 0.5 * big)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SMALL_SPACES), st.integers(0, 2**32 - 1))
def test_loss_matches_reference_and_dominance(space, seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, space.ell)
    y = spaces.uniform_sample(space, rng)
    s = Sample(x, y, space)
    w = rng.standard_normal(space.ell) * rng.uniform(0, 3)
    outs = spaces.enumerate_space(space)
    cand = samplers.sample_set(ProposalKind.GREEDY, space, x, w, 0.5, 50, rng).outputs
    for form in LossForm:
        all_loss = learning.sample_loss(space, s, w, None, form)
        rnd_loss = learning.sample_loss(space, s, w, cand, form)
        assert all_loss == pytest.approx(reference_loss(space, s, w, outs, form))
        assert rnd_loss == pytest.approx(reference_loss(space, s, w, cand, form))
        assert rnd_loss <= all_loss
    assert learning.sample_loss(space, s, w, None, LossForm.ZERO_ONE) <= learning.sample_loss(space, s, w, None, LossForm.HINGE)


@pytest.mark.parametrize("space", SMALL_SPACES + [Space(Kind.SET, 15, 4)], ids=space_id)
def test_gradient_finite_differences(space):
    rng = np.random.default_rng(5)
    _, samples = generate_data(space, 6, rng)
    lam = 0.05
    cfg = TrainConfig(lam=lam)
    checked = 0
    for _ in range(40):
        w = rng.standard_normal(space.ell)
        cands = [rng.choice(spaces.space_size(space), size=min(8, spaces.space_size(space)), replace=False) for _ in samples]
        if not differentiable(space, samples, w, cands):
            continue
        g = sum(learning.subgradient(space, s, w, c, 0.0) for s, c in zip(samples, cands)) / len(samples) + 2 * lam * w
        for _ in range(5):
            u = rng.standard_normal(space.ell)
            eps = 1e-6
            fd = (learning.objective(space, samples, w + eps * u, cfg, candidates=cands)
                  - learning.objective(space, samples, w - eps * u, cfg, candidates=cands)) / (2 * eps)
            assert fd == pytest.approx(g @ u, abs=1e-4)
        checked += 1
    assert checked >= 10


@pytest.mark.parametrize("space", SMALL_SPACES + [Space(Kind.SET, 15, 4), Space(Kind.DAG, 5, 2)], ids=space_id)
def test_exact_inference_brute_force(space):
    rng = np.random.default_rng(9)
    outs = spaces.enumerate_space(space)
    for _ in range(100 if len(outs) < 200 else 15):
        x = rng.integers(0, 2, space.ell)
        w = rng.standard_normal(space.ell)
        scores = [model.score(space, x, y, w) for y in outs]
        best = max(scores)
        want = outs[next(i for i, v in enumerate(scores) if v == best)]
        assert learning.infer_exact(space, x, w) == want
        assert learning.infer_exact(space, x, 3.7 * w) == want


def test_exact_inference_examples():
    assert learning.infer_exact(SET42, np.ones(6), np.zeros(6)) == spaces.enumerate_space(SET42)[0]
    w = np.zeros(6)
    w[spaces.pair_index(0, 1, 4)] = 1
    assert learning.infer_exact(SET42, np.ones(6), w) == ElemSet((0, 1))


def test_approx_inference_close_to_exact_on_small_sets():
    rng = np.random.default_rng(0)
    x = np.ones(6)
    w = np.zeros(6)
    w[spaces.pair_index(0, 1, 4)] = 1.0
    w[spaces.pair_index(2, 3, 4)] = -1.0
    exact = learning.infer_exact(SET42, x, w)
    hits = sum(learning.infer_approx(SET42, x, w, 0.5, 100, ProposalKind.GREEDY, rng) == exact for _ in range(1000))
    assert hits >= 990


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SMALL_SPACES), st.integers(0, 2**32 - 1))
def test_approx_never_beats_exact(space, seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, space.ell)
    w = rng.standard_normal(space.ell)
    a = learning.infer_approx(space, x, w, 0.5, 100, ProposalKind.GREEDY, rng)
    e = learning.infer_exact(space, x, w)
    assert model.score(space, x, a, w) <= model.score(space, x, e, w) + 1e-12


def test_train_config_guards():
    with pytest.raises(ValueError):
        TrainConfig(iterations=0)
    with pytest.raises(ValueError):
        TrainConfig(lam=0)


@pytest.mark.parametrize("objective", list(Objective))
def test_train_is_deterministic(objective):
    space = Space(Kind.DAG, 4, 2)
    _, samples = generate_data(space, 20, 3)
    cfg = TrainConfig(objective=objective, lam=0.05, iterations=8, seed=4)
    a = learning.train(space, samples, cfg)
    b = learning.train(space, samples, cfg)
    assert np.array_equal(a.w, b.w)
    assert a.loss_trace == b.loss_trace
    assert len(a.loss_trace) == 8
    if objective is Objective.MAX_RANDOM:
        assert a.resample_count > 0


def test_large_lambda_shrinks_w():
    space = SET42
    _, samples = generate_data(space, 10, 1)
    res = learning.train(space, samples, TrainConfig(lam=1e3, iterations=30, step_scale=1e-4))
    # the regularizer pins w near the hinge subgradient over 2 lambda
    assert np.linalg.norm(res.w) < 1e-3
    small = learning.train(space, samples, TrainConfig(lam=1e-3, iterations=30, step_scale=1e-4))
    assert np.linalg.norm(res.w) < np.linalg.norm(small.w)


def test_training_reduces_train_distortion():
    space = Space(Kind.SET, 6, 2)
    _, samples = generate_data(space, 50, 2)
    base = learning.evaluate_distortion(space, samples, np.zeros(space.ell))
    res = learning.train(space, samples, TrainConfig(lam=1 / 50, iterations=20))
    assert learning.evaluate_distortion(space, samples, res.w) < base


def test_evaluate_distortion_of_truth_is_zero():
    space = Space(Kind.TREE, 4)
    w_star, samples = generate_data(space, 30, 8)
    assert learning.evaluate_distortion(space, samples, w_star) == 0
    approx = learning.evaluate_distortion(space, samples, w_star, Inference.APPROX, beta=0.8, rng=1)
    assert 0 <= approx <= 1
