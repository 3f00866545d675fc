import json

import numpy as np
import pytest

from vdeeponet import autodiff as ad
from vdeeponet.deeponet import (DeepOnetParams, LiftSpec, LossWeights,
                                apply_lift_shear, apply_lift_tensile,
                                build_operator_graph, combine_embeddings,
                                data_misfit, deeponet_forward,
                                deeponet_from_record, deeponet_to_record,
                                hybrid_loss, lift_graph)
from vdeeponet.errors import ArgumentError, ConfigurationError, ShapeError
from vdeeponet.network import MlpParams, param_bindings, xavier_init


def _params(q=4, channels=3, m=6, d_t=3, seed=0):
    branch = xavier_init((m, 8, channels * q), seed)
    trunk = xavier_init((d_t, 8, channels * q), seed + 1)
    return DeepOnetParams(branch, trunk, q, channels)


def test_zero_branch_params_give_zero_outputs():
    q, channels, m = 3, 3, 5
    width = q * channels
    zero_branch = MlpParams((m, width), (np.zeros((m, width)),),
                            (np.zeros(width),))
    trunk = xavier_init((3, 8, width), 2)
    params = DeepOnetParams(zero_branch, trunk, q, channels)
    rng = np.random.default_rng(0)
    out = deeponet_forward(params, rng.normal(size=(7, m)),
                           rng.uniform(size=(7, 3)))
    assert np.array_equal(out, np.zeros((7, channels)))


def test_blockwise_dot_product_arithmetic():
    b = np.array([[1.0, 2.0]])
    t = np.array([[3.0, 4.0]])
    out = combine_embeddings(b, t, q=2, channels=1)
    assert out[0, 0] == 11.0


def test_width_mismatch_is_configuration_error():
    with pytest.raises(ConfigurationError):
        combine_embeddings(np.zeros((2, 6)), np.zeros((2, 6)), q=4, channels=2)
    with pytest.raises(ConfigurationError):
        DeepOnetParams(xavier_init((3, 7), 0), xavier_init((3, 7), 1), 2, 3)


def test_forward_permutation_equivariance():
    params = _params()
    rng = np.random.default_rng(3)
    branch = rng.normal(size=(10, 6))
    trunk = rng.uniform(size=(10, 3))
    out = deeponet_forward(params, branch, trunk)
    perm = rng.permutation(10)
    out_perm = deeponet_forward(params, branch[perm], trunk[perm])
    assert np.allclose(out_perm, out[perm], atol=1e-15)


def test_forward_bilinearity_in_embeddings():
    rng = np.random.default_rng(4)
    b = rng.normal(size=(9, 12))
    t = rng.normal(size=(9, 12))
    base = combine_embeddings(b, t, q=4, channels=3)
    scaled = combine_embeddings(2.5 * b, t, q=4, channels=3)
    assert np.max(np.abs(scaled - 2.5 * base)) < 1e-12
    addd = combine_embeddings(b + t, t, q=4, channels=3)
    assert np.max(np.abs(addd - base - combine_embeddings(t, t, 4, 3))) < 1e-12


def test_tensile_lift_boundary_identities():
    rng = np.random.default_rng(5)
    raw = rng.normal(size=(4, 3)) * 10
    dv = 7.3e-3
    top = apply_lift_tensile(raw, np.column_stack([rng.uniform(size=4),
                                                   np.ones(4)]), dv, 1e-2)
    assert np.array_equal(top.v, np.full(4, dv))
    left = apply_lift_tensile(raw, np.column_stack([np.zeros(4),
                                                    rng.uniform(size=4)]),
                              dv, 1e-2)
    assert np.array_equal(left.u, np.zeros(4))
    bottom = apply_lift_tensile(raw, np.column_stack([rng.uniform(size=4),
                                                      np.zeros(4)]), dv, 1e-2)
    assert np.array_equal(bottom.v, np.zeros(4))


def test_shear_lift_boundary_identities():
    rng = np.random.default_rng(6)
    raw = rng.normal(size=(4, 3)) * 10
    du = 1.2e-2
    bottom = apply_lift_shear(raw, np.column_stack([rng.uniform(size=4),
                                                    np.zeros(4)]), du, 1e-2)
    assert np.array_equal(bottom.u, np.zeros(4))
    assert np.array_equal(bottom.v, np.zeros(4))
    top = apply_lift_shear(raw, np.column_stack([rng.uniform(size=4),
                                                 np.ones(4)]), du, 1e-2)
    assert np.array_equal(top.u, np.full(4, du))
    right = apply_lift_shear(raw, np.column_stack([np.ones(4),
                                                   rng.uniform(size=4)]),
                             du, 1e-2)
    assert np.array_equal(right.v, np.zeros(4))


def _random_boundary_points(rng, n):
    t = rng.uniform(size=n)
    side = rng.integers(0, 4, size=n)
    x = np.where(side == 0, 0.0, np.where(side == 1, 1.0, t))
    y = np.where(side == 2, 0.0, np.where(side == 3, 1.0, t))
    # sides 0/1 fix x, sides 2/3 fix y; the free coordinate stays t
    x = np.where(side >= 2, t, x)
    y = np.where(side < 2, t, y)
    return np.column_stack([x, y]), side


def test_boundary_exactness_fracture_lifts():
    rng = np.random.default_rng(7)
    pts, side = _random_boundary_points(rng, 1000)
    raw = rng.normal(size=(1000, 3)) * 50.0
    dv = 5.8e-3
    tens = apply_lift_tensile(raw, pts, dv, 1e-2)
    assert np.max(np.abs(tens.u[side == 0])) < 1e-14
    assert np.max(np.abs(tens.u[side == 1])) < 1e-14
    assert np.max(np.abs(tens.v[side == 2])) < 1e-14
    assert np.max(np.abs(tens.v[side == 3] - dv)) < 1e-14
    du = 1.2e-2
    shear = apply_lift_shear(raw, pts, du, 1e-2)
    assert np.max(np.abs(shear.u[side == 2])) < 1e-14
    assert np.max(np.abs(shear.u[side == 3] - du)) < 1e-14
    assert np.max(np.abs(shear.v)) < 1e-14  # v vanishes on all four edges


def test_hybrid_loss_rules():
    rng = np.random.default_rng(8)
    pts = rng.uniform(size=(10, 2))
    pred_arrays = rng.normal(size=(10, 3))
    from vdeeponet.deeponet import FieldPrediction
    pred = FieldPrediction(pts, pred_arrays[:, 0], pred_arrays[:, 1],
                           pred_arrays[:, 2])
    # pure variational mode ignores targets entirely
    val = hybrid_loss(None, None, energy=-0.7, weights=LossWeights(0.0, 1.0))
    assert val == -0.7
    # zero energy weight and perfect data fit
    val = hybrid_loss(pred, pred_arrays, energy=123.0,
                      weights=LossWeights(1.0, 0.0))
    assert val == 0.0
    # weighted sum arithmetic with an injected energy value
    class _P:
        pass
    mock = FieldPrediction(pts[:1], np.array([1.0]), np.array([0.0]),
                           np.array([0.0]))
    targets = np.array([[1.0 + np.sqrt(1.5) * 1e-2, 0.0, 0.0]])
    # data term: ((sqrt(1.5)*1e-2)^2 / 1e-4) / 3 = 0.5
    val = hybrid_loss(mock, targets, energy=-0.2,
                      weights=LossWeights(1.0, 1.0), s_u=1e-2)
    assert abs(val - 0.3) < 1e-12
    with pytest.raises(ConfigurationError):
        hybrid_loss(pred, None, 0.0, LossWeights(1.0, 1.0))


def test_loss_weights_validation():
    with pytest.raises(ArgumentError):
        LossWeights(-1.0, 1.0)
    with pytest.raises(ArgumentError):
        LossWeights(0.0, 0.0)


def test_data_misfit_channel_scaling():
    pts = np.zeros((2, 2))
    from vdeeponet.deeponet import FieldPrediction
    pred = FieldPrediction(pts, np.array([1e-2, 0.0]), np.zeros(2),
                           np.zeros(2))
    targets = np.zeros((2, 3))
    # squared error 1e-4 on one of two points, scaled by 1/s_u^2, /3 channels
    val = data_misfit(pred, targets, s_u=1e-2)
    assert abs(val - (1.0 / 2.0) / 3.0) < 1e-15
    with pytest.raises(ShapeError):
        data_misfit(pred, np.zeros((3, 3)), 1e-2)


def test_symbolic_operator_matches_numpy_forward():
    params = _params(q=5, m=4, d_t=3, seed=9)
    rng = np.random.default_rng(10)
    n, p = 3, 6
    branch_unique = rng.normal(size=(n, 4))
    trunk = rng.uniform(size=(n * p, 3))
    op = build_operator_graph(ad.constant(branch_unique), ad.constant(trunk),
                              params.branch.widths, params.trunk.widths,
                              params.q, params.channels, reps=p)
    binds = {**param_bindings(params.branch, "branch"),
             **param_bindings(params.trunk, "trunk")}
    expected = deeponet_forward(params, np.repeat(branch_unique, p, axis=0),
                                trunk)
    for c in range(3):
        got = ad.evaluate(op.raw[c], binds)[:, 0]
        assert np.allclose(got, expected[:, c], atol=1e-14)


@pytest.mark.parametrize("scenario", ["tensile", "shear"])
def test_lift_graph_derivatives_match_fd(scenario):
    params = _params(q=4, m=5, d_t=2, seed=11)
    rng = np.random.default_rng(12)
    p = 40
    pts = rng.uniform(0.05, 0.95, size=(p, 2))
    branch_unique = rng.normal(size=(1, 5))
    dw = 4.4e-3
    s_u = 1e-2

    def numpy_lift(points):
        from vdeeponet.deeponet import apply_lift
        raw = deeponet_forward(params, np.repeat(branch_unique, p, axis=0),
                               points)
        return apply_lift(raw, points, LiftSpec(scenario, dw), s_u)

    op = build_operator_graph(ad.constant(branch_unique), ad.constant(pts),
                              params.branch.widths, params.trunk.widths,
                              params.q, params.channels, reps=p)
    lifted = lift_graph(op, pts, np.full((p, 1), dw), scenario, s_u)
    binds = {**param_bindings(params.branch, "branch"),
             **param_bindings(params.trunk, "trunk")}

    eps = 1e-6
    for axis, dnodes in ((0, (lifted.du_dx, lifted.dv_dx, lifted.dphi_dx)),
                         (1, (lifted.du_dy, lifted.dv_dy, lifted.dphi_dy))):
        plus = pts.copy()
        plus[:, axis] += eps
        minus = pts.copy()
        minus[:, axis] -= eps
        f_plus, f_minus = numpy_lift(plus), numpy_lift(minus)
        for node, (a, b) in zip(dnodes, ((f_plus.u, f_minus.u),
                                         (f_plus.v, f_minus.v),
                                         (f_plus.phi, f_minus.phi))):
            fd = (a - b) / (2 * eps)
            sym = ad.evaluate(node, binds)[:, 0]
            rel = np.abs(sym - fd) / (np.abs(fd) + 1e-10)
            assert np.max(rel) < 1e-5


def test_checkpoint_record_roundtrip():
    params = _params(q=4, m=6, seed=13)
    record = deeponet_to_record(params, "tensile", "s2", 1e-2, 21.6,
                                0.0, 5.8e-3)
    blob = json.dumps(record)
    restored, meta = deeponet_from_record(json.loads(blob))
    assert meta["scenario"] == "tensile"
    assert meta["energy_scale"] == 21.6
    for a, b in zip(params.branch.weights, restored.branch.weights):
        assert np.array_equal(a, b)
    for a, b in zip(params.trunk.weights, restored.trunk.weights):
        assert np.array_equal(a, b)
    bad = dict(record)
    bad["format_version"] = 99
    with pytest.raises(ConfigurationError):
        deeponet_from_record(bad)
