"""Reverse-mode gradients against hand-derived values and finite differences."""

import numpy as np
import pytest

from fisherscope import Batch, Parameter, ParameterSet, Role, Tensor, evaluate_graph, backward, per_sample_gradients
from fisherscope.autodiff import finite_difference_gradient
from fisherscope.errors import FisherscopeError, NonFiniteError, StaleActivationError
from fisherscope.models import make_forward

from conftest import class_batch, generic_point, lm_batch, tiny_mlp, tiny_transformer

DUMMY = Batch(np.zeros((1, 1)), np.zeros(1))


def one_param(values):
    return ParameterSet([Parameter("w", "w", Tensor(np.asarray(values, dtype=float)), Role.WEIGHT)])


def test_square_loss_value_and_gradient():
    # L(w) = w*w at w=3: value 9, dL/dw = 6
    ps = one_param([3.0])
    def fwd(g, batch):
        w = g.param("w")
        return g.sum_all(g.mul(w, w, "sq"), "loss")
    loss, rec = evaluate_graph(fwd, DUMMY, ps)
    assert loss == 9.0
    grads = backward(rec).grads
    assert np.allclose(grads["w"], [6.0])


def test_cross_entropy_uniform_two_logits():
    ps = one_param([0.0, 0.0])
    def fwd(g, batch):
        w = g.param("w")
        logits = g.reshape(w, (1, 2))
        return g.cross_entropy(logits, batch.targets.astype(np.int64))
    batch = Batch(np.zeros((1, 1)), np.array([0]))
    loss, rec = evaluate_graph(fwd, batch, ps)
    assert abs(loss - np.log(2.0)) < 1e-15
    grads = backward(rec).grads["w"]
    # softmax - onehot = [0.5 - 1, 0.5 - 0]
    assert np.allclose(grads, [-0.5, 0.5], atol=1e-15)


def test_mse_matches_half_sum_of_squares():
    ps = one_param([[1.0, -2.0]])
    def fwd(g, batch):
        return g.mse(g.param("w"), batch.targets)
    batch = Batch(np.zeros((1, 2)), np.array([[0.0, 0.0]]))
    loss, rec = evaluate_graph(fwd, batch, ps)
    assert abs(loss - 0.5 * (1.0 + 4.0)) < 1e-15
    assert np.allclose(backward(rec).grads["w"], [[1.0, -2.0]])


@pytest.mark.parametrize("activation", ["relu", "gelu"])
def test_mlp_gradients_match_finite_differences(activation):
    model = generic_point(tiny_mlp(seed=3, activation=activation), seed=3)
    fwd = make_forward(model, "classification")
    batch = class_batch(7, 6, 4, 3)
    _, rec = evaluate_graph(fwd, batch, model.params)
    exact = backward(rec)
    approx = finite_difference_gradient(fwd, batch, model.params)
    for pid in exact.grads:
        a, f = exact.grads[pid], approx.grads[pid]
        assert np.linalg.norm(a - f) <= 1e-5 * max(np.linalg.norm(f), 1e-8), pid


def test_transformer_gradients_match_finite_differences():
    model = tiny_transformer(seed=5)
    fwd = make_forward(model, "language_modeling")
    batch = lm_batch(11, 3, 5, 7)
    _, rec = evaluate_graph(fwd, batch, model.params)
    exact = backward(rec)
    approx = finite_difference_gradient(fwd, batch, model.params)
    err = np.linalg.norm(exact.flat() - approx.flat()) / np.linalg.norm(approx.flat())
    assert err < 1e-6, err


def test_per_sample_gradients_average_to_batch_gradient():
    model = tiny_mlp(seed=1)
    fwd = make_forward(model, "classification")
    batch = class_batch(2, 8, 4, 3)
    _, rec = evaluate_graph(fwd, batch, model.params)
    whole = backward(rec)
    singles = per_sample_gradients(fwd, batch, model.params)
    assert len(singles) == 8
    mean = np.mean([s.flat() for s in singles], axis=0)
    assert np.allclose(mean, whole.flat(), atol=1e-12)


def test_unused_parameter_gets_zero_gradient():
    ps = ParameterSet([
        Parameter("w", "w", Tensor(np.array([2.0])), Role.WEIGHT),
        Parameter("idle", "w", Tensor(np.array([1.0, 1.0])), Role.BIAS),
    ])
    def fwd(g, batch):
        w = g.param("w")
        return g.sum_all(g.mul(w, w))
    _, rec = evaluate_graph(fwd, DUMMY, ps)
    grads = backward(rec).grads
    assert np.array_equal(grads["idle"], np.zeros(2))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_raises():
    ps = one_param([800.0])
    def fwd(g, batch):
        w = g.param("w")
        e = g.unary(w, np.exp, lambda x: np.exp(x), "exp")
        return g.sum_all(e)
    with pytest.raises(NonFiniteError):
        evaluate_graph(fwd, DUMMY, ps)


def test_stale_activation_record_rejected():
    ps = one_param([1.0])
    def fwd(g, batch):
        w = g.param("w")
        return g.sum_all(g.mul(w, w))
    _, rec = evaluate_graph(fwd, DUMMY, ps)
    ps.replace("w", np.array([2.0]))
    with pytest.raises(StaleActivationError):
        backward(rec)


def test_non_scalar_loss_rejected():
    ps = one_param([1.0, 2.0])
    def fwd(g, batch):
        return g.param("w")
    with pytest.raises(FisherscopeError):
        evaluate_graph(fwd, DUMMY, ps)


def test_train_mode_noise_is_seeded():
    model = tiny_mlp(seed=9)
    from fisherscope.regularize import DropoutPlan
    plan = DropoutPlan.standard([s for s, _ in model.dropout_sites], 0.6)
    fwd = make_forward(model, "classification", plan=plan)
    batch = class_batch(4, 16, 4, 3)
    l1, _ = evaluate_graph(fwd, batch, model.params, mode="train", rng_seed=123)
    l2, _ = evaluate_graph(fwd, batch, model.params, mode="train", rng_seed=123)
    l3, _ = evaluate_graph(fwd, batch, model.params, mode="train", rng_seed=124)
    assert l1 == l2
    assert l1 != l3  # different seed draws different masks


def test_gradients_flow_through_dropout_mask():
    model = tiny_mlp(seed=4)
    from fisherscope.regularize import DropoutPlan
    plan = DropoutPlan.standard([s for s, _ in model.dropout_sites], 0.7)
    fwd = make_forward(model, "classification", plan=plan)
    batch = class_batch(6, 5, 4, 3)
    _, rec = evaluate_graph(fwd, batch, model.params, mode="train", rng_seed=77)
    exact = backward(rec)
    approx = finite_difference_gradient(fwd, batch, model.params, mode="train", rng_seed=77)
    err = np.linalg.norm(exact.flat() - approx.flat()) / max(np.linalg.norm(approx.flat()), 1e-12)
    assert err < 1e-6, err
