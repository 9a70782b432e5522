"""Fisher diagonal estimation against hand-computed and loop oracles."""

import csv

import numpy as np
import pytest

from fisherscope import Batch, Parameter, ParameterSet, Role, Tensor, evaluate_graph, backward, per_sample_gradients
from fisherscope.errors import ConfigError, FingerprintMismatchError
from fisherscope.fisher import (
    FisherEstimate,
    aggregate_by_layer,
    estimate_empirical_fisher,
    export_score_distributions,
    hessian_diag_fd,
    rank_layers,
    stability_metrics,
    top_fraction_mask,
)
from fisherscope.models import make_forward

from conftest import class_batch, flatten_by_pid, tiny_mlp


def scalar_param(value, pid="w"):
    return ParameterSet([Parameter(pid, pid, Tensor(np.asarray(value, dtype=float)), Role.WEIGHT)])


def logistic_forward(g, batch):
    w = g.param("w")
    logits = g.matmul(g.constant(batch.inputs), w, "logits")
    return g.cross_entropy(logits, batch.targets.astype(np.int64))


def test_logistic_fisher_is_one_quarter_at_zero():
    # logits = x @ w with w = 0: softmax is uniform, so each per-sample score
    # is (0.5 - onehot) * x and every squared coordinate is exactly 0.25
    ps = scalar_param([[0.0, 0.0]])
    inputs = np.ones((6, 1))
    targets = np.array([0, 1, 0, 1, 1, 0])
    est = estimate_empirical_fisher(logistic_forward, inputs, targets, ps, {"w": "w"})
    assert np.allclose(est.values["w"], 0.25, atol=1e-15)
    assert est.sample_count == 6


def test_estimate_matches_independent_accumulation():
    model = tiny_mlp(seed=6, depth=2, width=6)
    fwd = make_forward(model, "classification")
    batch = class_batch(3, 40, 4, 3)
    layer_of = {p.id: p.layer_id for p in model.params}
    est = estimate_empirical_fisher(fwd, batch.inputs, batch.targets, model.params, layer_of)
    acc = {p.id: np.zeros_like(p.array) for p in model.params}
    for rec in per_sample_gradients(fwd, batch, model.params):
        for pid, g in rec.grads.items():
            acc[pid] += g * g
    for pid in acc:
        assert np.allclose(est.values[pid], acc[pid] / 40, atol=1e-15), pid


def test_subsampling_is_seeded_and_capped():
    model = tiny_mlp(seed=6)
    fwd = make_forward(model, "classification")
    batch = class_batch(4, 30, 4, 3)
    layer_of = {p.id: p.layer_id for p in model.params}
    args = (fwd, batch.inputs, batch.targets, model.params, layer_of)
    a = estimate_empirical_fisher(*args, samples=10, seed=1)
    b = estimate_empirical_fisher(*args, samples=10, seed=1)
    c = estimate_empirical_fisher(*args, samples=10, seed=2)
    assert np.array_equal(a.flat(), b.flat())
    assert not np.array_equal(a.flat(), c.flat())
    assert a.sample_count == 10
    # asking for more samples than exist degrades to the full set
    full = estimate_empirical_fisher(*args)
    over = estimate_empirical_fisher(*args, samples=999)
    assert np.array_equal(full.flat(), over.flat())
    assert full.sample_count == 30


def test_batch_size_does_not_change_the_estimate():
    model = tiny_mlp(seed=2)
    fwd = make_forward(model, "classification")
    batch = class_batch(9, 25, 4, 3)
    layer_of = {p.id: p.layer_id for p in model.params}
    a = estimate_empirical_fisher(fwd, batch.inputs, batch.targets, model.params,
                                  layer_of, batch_size=1)
    b = estimate_empirical_fisher(fwd, batch.inputs, batch.targets, model.params,
                                  layer_of, batch_size=64)
    assert np.array_equal(a.flat(), b.flat())


def test_empty_dataset_rejected():
    model = tiny_mlp()
    fwd = make_forward(model, "classification")
    with pytest.raises(ConfigError):
        estimate_empirical_fisher(fwd, np.zeros((0, 4)), np.zeros(0), model.params, {})


def hand_estimate():
    return FisherEstimate(
        values={"a.w": np.array([5.0, 1.0]), "b.w": np.array([3.0, 2.0, 4.0])},
        layer_of={"a.w": "a", "b.w": "b"},
        sample_count=7,
        model_fingerprint="fp",
    )


def test_aggregate_and_rank_layers():
    stats = aggregate_by_layer(hand_estimate())
    assert stats["a"] == {"mean": 3.0, "sum": 6.0, "count": 2}
    assert stats["b"] == {"mean": 3.0, "sum": 9.0, "count": 3}
    # equal means fall back to layer id order
    assert rank_layers(stats) == ["a", "b"]
    stats["a"]["mean"] = 10.0
    assert rank_layers(stats) == ["b", "a"]


def test_top_fraction_mask_selection():
    est = hand_estimate()  # flat (sorted pids) = [5, 1, 3, 2, 4]
    top = top_fraction_mask(est, 0.4)
    assert np.array_equal(top["a.w"], [True, False])
    assert np.array_equal(top["b.w"], [False, False, True])
    bottom = top_fraction_mask(est, 0.4, select="bottom")
    assert np.array_equal(bottom["a.w"], [False, True])
    assert np.array_equal(bottom["b.w"], [False, True, False])
    rand = top_fraction_mask(est, 0.4, select="random", seed=0)
    assert sum(m.sum() for m in rand.values()) == 2
    assert top_fraction_mask(est, 0.4, select="random", seed=0).keys() == rand.keys()


def test_mask_count_rounds_half_up_and_nests():
    est = hand_estimate()
    # 0.5 of 5 coordinates rounds to 3
    assert sum(m.sum() for m in top_fraction_mask(est, 0.5).values()) == 3
    small = flatten_by_pid(top_fraction_mask(est, 0.2))
    large = flatten_by_pid(top_fraction_mask(est, 0.6))
    assert np.all(large[small.astype(bool)])  # smaller top set nests in the larger
    with pytest.raises(ConfigError):
        top_fraction_mask(est, 0.0)
    with pytest.raises(ConfigError):
        top_fraction_mask(est, 0.4, select="middle")


def test_score_ties_resolve_by_flat_position():
    est = FisherEstimate(values={"w": np.array([1.0, 1.0, 1.0])},
                         layer_of={"w": "w"}, sample_count=1, model_fingerprint="")
    m = top_fraction_mask(est, 2 / 3)
    assert np.array_equal(m["w"], [True, True, False])


def test_stability_metrics_basics():
    est = hand_estimate()
    same = stability_metrics(est, est)
    assert abs(same["cosine"] - 1.0) < 1e-12
    assert abs(same["kl"]) < 1e-9
    scaled = hand_estimate()
    scaled.values = {k: v * 3.0 for k, v in scaled.values.items()}
    assert abs(stability_metrics(est, scaled)["cosine"] - 1.0) < 1e-12
    other = hand_estimate()
    other.values = {"a.w": np.array([0.0, 4.0]), "b.w": np.array([1.0, 6.0, 0.5])}
    s = stability_metrics(est, other)
    a = est.flat()
    b = other.flat()
    assert abs(s["cosine"] - a @ b / (np.linalg.norm(a) * np.linalg.norm(b))) < 1e-12
    pa = (a + 1e-12) / (a + 1e-12).sum()
    pb = (b + 1e-12) / (b + 1e-12).sum()
    assert abs(s["kl"] - np.sum(pa * np.log(pa / pb))) < 1e-12


def test_stability_metrics_per_layer_rows():
    est = hand_estimate()
    s = stability_metrics(est, est, top_k=4)  # top-4 coords: 5,4,3,2 -> a gets 1, b gets 3
    assert "b" in s["layers"] and s["layers"]["b"]["coords"] >= 2
    assert "a" not in s["layers"]  # single coordinate is not a correlation


def test_stability_metrics_rejects_mismatched_sets():
    est = hand_estimate()
    other = FisherEstimate(values={"z": np.ones(2)}, layer_of={"z": "z"},
                           sample_count=1, model_fingerprint="")
    with pytest.raises(ConfigError):
        stability_metrics(est, other)


def test_estimate_round_trip_and_fingerprint_guard(tmp_path):
    est = hand_estimate()
    path = tmp_path / "f.est"
    est.save(path)
    back = FisherEstimate.load(path)
    assert back.sample_count == 7
    assert back.model_fingerprint == "fp"
    assert back.layer_of == est.layer_of
    assert np.array_equal(back.flat(), est.flat())
    assert back.digest() == est.digest()
    back.check_fingerprint("fp")
    with pytest.raises(FingerprintMismatchError):
        back.check_fingerprint("не тот")


def test_digest_tracks_values():
    a, b = hand_estimate(), hand_estimate()
    b.values["a.w"] = b.values["a.w"] + 1e-9
    assert a.digest() != b.digest()


def test_export_distributions_schema(tmp_path):
    paths = export_score_distributions(hand_estimate(), tmp_path)
    rows = list(csv.reader(open(paths[0])))
    assert rows[0] == ["parameter", "layer", "index", "score"]
    scores = [float(r[3]) for r in rows[1:]]
    assert max(scores) == 1.0 and len(scores) == 5
    lrows = list(csv.reader(open(paths[1])))
    assert lrows[0] == ["layer", "mean_score", "sum_score", "count"]
    crows = list(csv.reader(open(paths[2])))
    assert crows[0] == ["rank_fraction", "mass_fraction"]
    assert float(crows[-1][1]) == pytest.approx(1.0)


def test_hessian_diagonal_closed_forms():
    # L = w^2 -> d2L/dw2 = 2;  L = w^4 at w = 1 -> 12
    ps = scalar_param([1.0])
    def quad(g, batch):
        w = g.param("w")
        return g.sum_all(g.mul(w, w))
    def quart(g, batch):
        w = g.param("w")
        w2 = g.mul(w, w)
        return g.sum_all(g.mul(w2, w2))
    dummy = Batch(np.zeros((1, 1)), np.zeros(1))
    h2 = hessian_diag_fd(quad, dummy, ps, step=1e-3)
    assert abs(h2["w"][0] - 2.0) < 1e-6
    h4 = hessian_diag_fd(quart, dummy, ps, step=1e-3)
    assert abs(h4["w"][0] - 12.0) < 1e-4
