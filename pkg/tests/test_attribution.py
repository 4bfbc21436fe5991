"""Attribution explainer tests.

Oracles: closed-form linear-model attributions, hand-enumerated occlusion
drops, an explicit weighted-normal-equations ridge solve for LIME, and the
per-layer epsilon leak bound for LRP.
"""

from dataclasses import replace

import numpy as np
import pytest

from explainlab.attribution import (
    ATTRIBUTION_DESCRIPTORS,
    grid_segments,
    gradient,
    gradient_x_input,
    integrated_gradients,
    lime,
    lrp_epsilon,
    occlusion,
    run_attribution,
    saliency,
    smoothgrad,
)
from explainlab.errors import InvalidParam, NotFound
from explainlab.graph import GraphDef, NodeDef, forward, new_state, pre_softmax_scores

from util import linear_state, positive_chain_state, random_chain_state, zero_bias_state


W2 = np.array([[3.0, 1.0], [-2.0, 4.0]])


def _linear2():
    return linear_state(W2, num_classes=2)


# ---------------------------------------------------------------------------
# Gradient-family closed forms


def test_saliency_linear_closed_form():
    amap = saliency(_linear2(), np.array([0.5, -1.5]), target=0)
    assert np.array_equal(amap.values, W2[:, 0])
    assert amap.explainer_id == "saliency"
    assert amap.target_class == 0


def test_gradient_is_saliency_alias():
    x = np.array([0.5, -1.5])
    a = saliency(_linear2(), x, target=1)
    b = gradient(_linear2(), x, target=1)
    assert np.array_equal(a.values, b.values)
    assert b.explainer_id == "gradient"


def test_gradient_x_input_linear_closed_form():
    x = np.array([0.5, -1.5])
    amap = gradient_x_input(_linear2(), x, target=0)
    assert np.array_equal(amap.values, W2[:, 0] * x)


def test_integrated_gradients_linear_closed_form():
    # For a linear model IG equals x * w exactly, for any step count.
    x = np.array([0.5, -1.5])
    for m in (1, 7, 64):
        amap = integrated_gradients(_linear2(), x, target=1, m=m)
        assert np.allclose(amap.values, W2[:, 1] * x, atol=1e-12)


def test_integrated_gradients_completeness():
    # Canonically initialized nets (He weights, zero biases): no relu kink
    # sits strictly inside the zero-baseline path, so m=256 closes the
    # completeness gap well inside tolerance.
    rng = np.random.default_rng(11)
    for _ in range(5):
        state, x = random_chain_state(rng, perturb=False)
        target = int(rng.integers(0, state.graph.num_classes))
        amap = integrated_gradients(state, x, target, m=256)
        diff = float(pre_softmax_scores(state, x)[target]) - float(
            pre_softmax_scores(state, np.zeros_like(x))[target]
        )
        assert abs(amap.values.sum() - diff) <= 1e-3 * abs(diff) + 1e-6


def test_integrated_gradients_converges_to_reference():
    # Biased nets have relu kinks inside the path; the m=256 sum must agree
    # with a high-resolution (m=65536) reference to discretization accuracy.
    rng = np.random.default_rng(12)
    for _ in range(2):
        state, x = random_chain_state(rng)
        target = int(rng.integers(0, state.graph.num_classes))
        coarse = integrated_gradients(state, x, target, m=256).values.sum()
        reference = integrated_gradients(state, x, target, m=65536).values.sum()
        diff = float(pre_softmax_scores(state, x)[target]) - float(
            pre_softmax_scores(state, np.zeros_like(x))[target]
        )
        # The reference itself satisfies completeness tightly...
        assert abs(reference - diff) <= 1e-4 * abs(diff) + 1e-6
        # ...and the coarse sum sits within midpoint-rule error of it.
        assert abs(coarse - reference) <= 5e-2 * max(abs(diff), 1.0)


def test_integrated_gradients_custom_baseline():
    x = np.array([1.0, 1.0])
    base = np.array([1.0, 0.0])
    amap = integrated_gradients(_linear2(), x, target=0, baseline=base, m=16)
    # Only the second coordinate moves: attribution = (x - base) * w.
    assert np.allclose(amap.values, (x - base) * W2[:, 0], atol=1e-12)
    assert amap.meta["baseline"] == "custom"


def test_integrated_gradients_rejects_bad_m():
    with pytest.raises(InvalidParam):
        integrated_gradients(_linear2(), np.zeros(2), target=0, m=0)


def test_smoothgrad_degenerate_equals_saliency():
    rng = np.random.default_rng(2)
    state, x = random_chain_state(rng)
    sal = saliency(state, x, target=0)
    smooth = smoothgrad(state, x, target=0, n=1, sigma_rel=0.0)
    assert np.array_equal(smooth.values, sal.values)  # bit-identical


def test_smoothgrad_seeded_determinism():
    rng = np.random.default_rng(3)
    state, x = random_chain_state(rng)
    a = smoothgrad(state, x, target=0, n=8, sigma_rel=0.1, seed=42)
    b = smoothgrad(state, x, target=0, n=8, sigma_rel=0.1, seed=42)
    c = smoothgrad(state, x, target=0, n=8, sigma_rel=0.1, seed=43)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.meta["sigma"] == pytest.approx(0.1 * (x.max() - x.min()))


def test_smoothgrad_rejects_bad_n():
    with pytest.raises(InvalidParam):
        smoothgrad(_linear2(), np.zeros(2), target=0, n=0)


# ---------------------------------------------------------------------------
# Occlusion


def test_occlusion_1d_hand_enumeration():
    w = np.array([[1.0], [2.0], [3.0]])
    state = linear_state(w)
    x = np.array([1.0, 10.0, 100.0])
    amap = occlusion(state, x, target=0, window=2, stride=1)
    d0 = 1.0 * 1 + 10.0 * 2  # blanking [x0, x1]
    d1 = 10.0 * 2 + 100.0 * 3  # blanking [x1, x2]
    assert np.allclose(amap.values, [d0, (d0 + d1) / 2, d1], atol=1e-12)


def test_occlusion_window1_linear_is_grad_x_input():
    rng = np.random.default_rng(4)
    w = rng.normal(size=(4, 1))
    state = linear_state(w)
    x = rng.normal(size=4)
    amap = occlusion(state, x, target=0, window=1)
    assert np.allclose(amap.values, w[:, 0] * x, atol=1e-12)


def test_occlusion_2d_blanks_all_channels():
    graph = GraphDef(
        nodes=(NodeDef("input", "input"), NodeDef("flatten", "flatten"),
               NodeDef("dense", "dense", {"units": 1})),
        input_shape=(2, 2, 2),
        num_classes=1,
    )
    state = new_state(graph, {})
    w = np.arange(1.0, 9.0).reshape(8, 1)
    state = replace(state, parameters={"dense": {"weights": w, "bias": np.zeros(1)}})
    x = np.ones((2, 2, 2))
    amap = occlusion(state, x, target=0, window=1)
    # Blanking cell (i,j) removes both channel contributions.
    expected = w[:, 0].reshape(2, 2, 2).sum(axis=2, keepdims=True).repeat(2, axis=2)
    assert np.allclose(amap.values, expected, atol=1e-12)


def test_occlusion_custom_baseline_value():
    state = linear_state(np.array([[2.0]]))
    amap = occlusion(state, np.array([5.0]), target=0, window=1, baseline_value=1.0)
    # drop = 2*5 - 2*1
    assert amap.values[0] == pytest.approx(8.0)
    assert amap.meta["baseline_value"] == 1.0


def test_occlusion_rejects_bad_window():
    state = linear_state(np.array([[1.0], [1.0]]))
    with pytest.raises(InvalidParam):
        occlusion(state, np.zeros(2), target=0, window=3)
    with pytest.raises(InvalidParam):
        occlusion(state, np.zeros(2), target=0, window=0)


# ---------------------------------------------------------------------------
# LIME


def test_grid_segments_remainder_absorbed():
    assert grid_segments((8,), 3).tolist() == [0, 0, 0, 1, 1, 1, 1, 1]
    seg = grid_segments((8, 8, 1), 3)
    assert seg.shape == (8, 8, 1)
    assert seg[0, 0, 0] == 0
    assert seg[7, 7, 0] == seg[3, 3, 0]  # remainder rows/cols join the last block
    assert len(np.unique(seg)) == 4
    seg2 = grid_segments((8, 8, 2), 2)
    assert np.array_equal(seg2[..., 0], seg2[..., 1])  # channels share segments
    assert len(np.unique(seg2)) == 16


def _lime_oracle(state, x, target, n_seg, n_samples, kernel_width_rel, ridge_lambda, seed):
    """Weighted ridge with unpenalized intercept via explicit normal equations."""
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2, size=(n_samples, n_seg)).astype(np.float64)
    masks[0, :] = 1.0
    ys = np.empty(n_samples)
    for i in range(n_samples):
        probe = np.where(masks[i].astype(bool), x, 0.0)
        ys[i] = float(pre_softmax_scores(state, probe)[target])
    dist = 1.0 - masks.mean(axis=1)
    w = np.exp(-(dist ** 2) / kernel_width_rel ** 2)
    design = np.hstack([np.ones((n_samples, 1)), masks])
    penalty = np.eye(n_seg + 1) * ridge_lambda
    penalty[0, 0] = 0.0
    lhs = design.T @ (w[:, None] * design) + penalty
    rhs = design.T @ (w * ys)
    theta = np.linalg.solve(lhs, rhs)
    return theta[0], theta[1:]


def test_lime_matches_normal_equations_oracle():
    state = linear_state(np.array([[1.0, 0.5], [-2.0, 1.0], [3.0, -1.0], [0.5, 2.0]]), num_classes=2)
    x = np.array([1.0, 2.0, -1.0, 0.5])
    amap = lime(state, x, target=0, segments="identity", n_samples=200, seed=9)
    intercept, coef = _lime_oracle(state, x, 0, 4, 200, 0.25, 1e-3, 9)
    assert np.allclose(amap.values, coef, atol=1e-8)
    assert amap.meta["intercept"] == pytest.approx(intercept, abs=1e-8)


def test_lime_recovers_linear_attributions():
    state = linear_state(np.array([[1.0], [-2.0], [3.0], [0.5]]))
    x = np.array([1.0, 2.0, -1.0, 0.5])
    amap = lime(state, x, target=0, segments="identity", n_samples=1000, seed=0)
    gxi = gradient_x_input(state, x, target=0).values
    cos = float(np.dot(amap.values, gxi) / (np.linalg.norm(amap.values) * np.linalg.norm(gxi)))
    assert cos >= 0.99
    assert amap.meta["r2"] >= 0.999  # linear target is (almost) exactly fit
    assert amap.meta["r2"] <= 1.0 + 1e-12


def test_lime_seeded_determinism_and_segment_map():
    rng = np.random.default_rng(6)
    state, x = random_chain_state(rng)
    while x.ndim != 3:  # grid segmentation needs a spatial sample
        state, x = random_chain_state(rng)
    a = lime(state, x, target=0, segments="grid2", n_samples=64, seed=5)
    b = lime(state, x, target=0, segments="grid2", n_samples=64, seed=5)
    assert np.array_equal(a.values, b.values)
    assert a.segments is not None
    assert a.segments.shape == x.shape
    assert len(a.values) == len(np.unique(a.segments))
    d = a.to_dict()
    assert d["segments_shape"] == list(x.shape)


def test_lime_rejects_too_few_samples():
    state = linear_state(np.ones((4, 1)))
    with pytest.raises(InvalidParam):
        lime(state, np.ones(4), target=0, segments="identity", n_samples=3)


def test_lime_rejects_bad_segment_spec():
    state = linear_state(np.ones((4, 1)))
    with pytest.raises(InvalidParam):
        lime(state, np.ones(4), target=0, segments="grid0")
    with pytest.raises(InvalidParam):
        lime(state, np.ones(4), target=0, segments="blobs")
    with pytest.raises(InvalidParam):
        lime(state, np.ones(4), target=0, segments=np.zeros((2, 2), dtype=np.int64))


# ---------------------------------------------------------------------------
# LRP


def test_lrp_linear_zero_epsilon_is_grad_x_input():
    x = np.array([0.5, -1.5])
    amap = lrp_epsilon(_linear2(), x, target=0, epsilon=0.0)
    assert np.allclose(amap.values, W2[:, 0] * x, atol=1e-15)
    assert amap.values.sum() == pytest.approx(float(pre_softmax_scores(_linear2(), x)[0]), abs=1e-12)


def test_lrp_conservation_on_positive_nets():
    rng = np.random.default_rng(13)
    for _ in range(10):
        state, x = positive_chain_state(rng)
        target = int(rng.integers(0, state.graph.num_classes))
        amap = lrp_epsilon(state, x, target, epsilon=0.0)
        score = float(pre_softmax_scores(state, x)[target])
        assert abs(amap.values.sum() - score) <= 1e-8 * max(1.0, abs(score))


def test_lrp_epsilon_leak_within_accounting_bound():
    rng = np.random.default_rng(14)
    eps = 0.01
    for _ in range(10):
        state, x = zero_bias_state(rng)
        target = int(rng.integers(0, state.graph.num_classes))
        amap = lrp_epsilon(state, x, target, epsilon=eps, return_layers=True)
        layers = amap.meta["layer_relevances"]
        _, cache = forward(state, x)  # independent forward pass for the z_j
        score = float(pre_softmax_scores(state, x)[target])
        bound = 0.0
        for node in state.graph.nodes:
            if not node.trainable:
                continue
            r = np.asarray(layers[node.name])
            z = np.asarray(cache[node.name])
            denom = np.abs(z + eps * np.where(z >= 0, 1.0, -1.0))
            bound += eps * float(np.sum(np.abs(r) / denom))
        leak = abs(amap.values.sum() - score)
        assert leak <= bound + 1e-12, f"leak {leak:.3e} exceeds bound {bound:.3e}"


def test_lrp_zero_preactivation_stays_finite():
    # dense1 output is exactly 0; the epsilon stabilizer (sign(0) = +1)
    # keeps the propagation finite.
    graph = GraphDef(
        nodes=(NodeDef("input", "input"), NodeDef("dense1", "dense", {"units": 1}),
               NodeDef("dense2", "dense", {"units": 1})),
        input_shape=(2,),
        num_classes=1,
    )
    state = new_state(graph, {})
    state = replace(state, parameters={
        "dense1": {"weights": np.array([[1.0], [-1.0]]), "bias": np.zeros(1)},
        "dense2": {"weights": np.array([[2.0]]), "bias": np.array([1.0])},
    })
    amap = lrp_epsilon(state, np.array([1.0, 1.0]), target=0, epsilon=0.01)
    assert np.all(np.isfinite(amap.values))


def test_lrp_maxpool_routes_to_max():
    graph = GraphDef(
        nodes=(NodeDef("input", "input"), NodeDef("pool", "maxpool2"),
               NodeDef("flatten", "flatten"), NodeDef("dense", "dense", {"units": 1})),
        input_shape=(2, 2, 1),
        num_classes=1,
    )
    state = new_state(graph, {})
    state = replace(state, parameters={"dense": {"weights": np.array([[1.0]]), "bias": np.zeros(1)}})
    x = np.array([[[1.0], [4.0]], [[2.0], [3.0]]])
    amap = lrp_epsilon(state, x, target=0, epsilon=0.0)
    # All relevance lands on the max element (value 4).
    assert amap.values[0, 1, 0] == pytest.approx(4.0)
    assert amap.values.sum() == pytest.approx(4.0)
    assert np.count_nonzero(amap.values) == 1


# ---------------------------------------------------------------------------
# Registry / dispatch


def test_dispatch_runs_every_registered_explainer():
    rng = np.random.default_rng(17)
    state, x = random_chain_state(rng)
    while x.ndim != 3:
        state, x = random_chain_state(rng)
    for d in ATTRIBUTION_DESCRIPTORS:
        amap = run_attribution(d.id, state, x, 0)
        assert amap.explainer_id == d.id
        assert amap.prediction.shape == (state.graph.num_classes,)
        if d.id == "lime":
            assert amap.segments is not None
        else:
            assert amap.values.shape == x.shape


def test_dispatch_unknown_explainer():
    with pytest.raises(NotFound):
        run_attribution("deeplift", _linear2(), np.zeros(2), 0)


def test_descriptor_taxonomy():
    by_id = {d.id: d for d in ATTRIBUTION_DESCRIPTORS}
    assert len(by_id) == 8
    for d in ATTRIBUTION_DESCRIPTORS:
        assert d.level == "local"
        assert d.abstraction == "high"
        assert d.kind == "attribution"
    assert set(by_id["lime"].dependencies) == {"data"}
    for other in set(by_id) - {"lime"}:
        assert set(by_id[other].dependencies) == {"data", "model", "domain"}
