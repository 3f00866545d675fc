import numpy as np
import pytest

from vdeeponet.darcy import (ConductivitySample, KernelSpec, darcy_energy,
                             kl_eigendecomposition, lift_darcy, predict_head,
                             sample_conductivity, train_darcy)
from vdeeponet.errors import ArgumentError, ConfigurationError
from vdeeponet.network import TrainingConfig
from vdeeponet.oracle import Grid, darcy_fd_solve, darcy_grid_energy

GRID = Grid(16, 16)
KERNEL = KernelSpec(0.25, 0.25, 100)


def test_kernel_spec_validation():
    with pytest.raises(ArgumentError):
        KernelSpec(0.0, 0.25)
    with pytest.raises(ArgumentError):
        KernelSpec(0.25, 0.25, 0)


def test_zero_coefficients_give_unit_conductivity():
    sample = sample_conductivity(KERNEL, GRID, seed=0,
                                 xi=np.zeros(KERNEL.truncation))
    assert np.array_equal(sample.values, np.ones((16, 16)))


def test_samples_positive_and_deterministic():
    a = sample_conductivity(KERNEL, GRID, seed=7)
    b = sample_conductivity(KERNEL, GRID, seed=7)
    c = sample_conductivity(KERNEL, GRID, seed=8)
    assert np.all(a.values > 0.0)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_kl_spectrum_decay_and_retained_energy():
    grid = Grid(32, 32)
    eigvals, _ = kl_eigendecomposition(KernelSpec(0.25, 0.25, 100), grid)
    assert np.all(np.diff(eigvals) <= 1e-9)
    assert np.all(eigvals >= 0.0)
    retained = eigvals[:100].sum() / eigvals.sum()
    assert retained > 0.99


def test_darcy_energy_cases():
    rng = np.random.default_rng(0)
    pts = rng.uniform(size=(100_000, 2))
    zero = darcy_energy(np.zeros(10), np.zeros((10, 2)), np.ones(10), 1.0)
    assert zero == 0.0
    # closed form: psi = 1/2 * 1/45 - 1/36 = -1/60
    x, y = pts[:, 0], pts[:, 1]
    h = x * (1 - x) * y * (1 - y)
    grad = np.column_stack([(1 - 2 * x) * y * (1 - y),
                            x * (1 - x) * (1 - 2 * y)])
    val = darcy_energy(h, grad, np.ones(len(pts)), 1.0)
    assert abs(val - (-1.0 / 60.0)) < 0.01 * (1.0 / 60.0)
    with pytest.raises(ArgumentError):
        darcy_energy(np.zeros(3), np.zeros((4, 2)), np.ones(3), 1.0)


def test_darcy_energy_permutation_invariant():
    rng = np.random.default_rng(1)
    h = rng.normal(size=50)
    g = rng.normal(size=(50, 2))
    k = rng.uniform(0.5, 2.0, size=50)
    base = darcy_energy(h, g, k, 1.0)
    perm = rng.permutation(50)
    assert np.isclose(darcy_energy(h[perm], g[perm], k[perm], 1.0), base,
                      rtol=1e-12)


def test_fd_solution_energy_beats_perturbations():
    rng = np.random.default_rng(2)
    k = np.exp(rng.normal(scale=0.3, size=(16, 16)))
    h = darcy_fd_solve(k, GRID)
    base = darcy_grid_energy(h, k, GRID)
    noisy = h.copy()
    noisy[1:-1, 1:-1] += 1e-2 * rng.normal(size=(14, 14))
    assert darcy_grid_energy(noisy, k, GRID) > base


def test_lift_darcy_boundary_and_center():
    rng = np.random.default_rng(3)
    t = rng.uniform(size=8)
    for pts in (np.column_stack([np.zeros(8), t]),
                np.column_stack([np.ones(8), t]),
                np.column_stack([t, np.zeros(8)]),
                np.column_stack([t, np.ones(8)])):
        assert np.max(np.abs(lift_darcy(np.full(8, 3.7), pts))) == 0.0
    center = lift_darcy(np.array([1.0]), np.array([[0.5, 0.5]]))
    assert np.isclose(center[0], 1.0 / 16.0)
    interior = rng.uniform(0.05, 0.95, size=(50, 2))
    raw = rng.normal(size=50)
    assert np.all(np.sign(lift_darcy(raw, interior)) == np.sign(raw))


def test_lift_darcy_boundary_exactness_random_networks():
    rng = np.random.default_rng(4)
    t = rng.uniform(size=1000)
    side = rng.integers(0, 4, size=1000)
    x = np.where(side == 0, 0.0, np.where(side == 1, 1.0, t))
    y = np.where(side == 2, 0.0, np.where(side == 3, 1.0, t))
    x = np.where(side >= 2, t, x)
    y = np.where(side < 2, t, y)
    raw = rng.normal(size=1000) * 100.0
    lifted = lift_darcy(raw, np.column_stack([x, y]))
    assert np.max(np.abs(lifted)) < 1e-14


def test_train_darcy_rejects_data_weight():
    sample = sample_conductivity(KERNEL, GRID, seed=0)
    with pytest.raises(ConfigurationError):
        train_darcy([sample], GRID, np.zeros((4, 2)) + 0.5,
                    TrainingConfig(epochs=1, lambda_data=1.0), (8,), (8,), 4)


def test_exact_minimizer_energy_below_any_network_output():
    rng = np.random.default_rng(5)
    from vdeeponet.deeponet import DeepOnetParams, deeponet_forward
    from vdeeponet.network import xavier_init
    nodes = GRID.nodes()
    for seed in range(10):
        k = np.exp(rng.normal(scale=0.3, size=(16, 16)))
        h_star = darcy_fd_solve(k, GRID)
        base = darcy_grid_energy(h_star, k, GRID)
        params = DeepOnetParams(xavier_init((256, 8, 6), seed),
                                xavier_init((2, 8, 6), seed + 1), 6, 1)
        raw = deeponet_forward(params, np.tile(k.reshape(1, -1), (256, 1)),
                               nodes)
        h_net = lift_darcy(raw[:, 0], nodes).reshape(16, 16)
        assert darcy_grid_energy(h_net, k, GRID) >= base


@pytest.mark.slow
def test_constant_k_overfit_approaches_fd_solution():
    grid = Grid(32, 32)
    sample = sample_conductivity(KernelSpec(0.25, 0.25, 100), grid, seed=0,
                                 xi=np.zeros(100))
    rng = np.random.default_rng(6)
    pts = rng.uniform(size=(2000, 2))
    cfg = TrainingConfig(epochs=4000, seed=0, learning_rate=3e-3,
                         lambda_data=0.0)
    res = train_darcy([sample], grid, pts, cfg, (32,) * 5, (32,) * 5, 32)
    assert not res.aborted
    assert np.all(np.isfinite(res.trace[:, 1]))

    h_fd = darcy_fd_solve(sample.values, grid)
    nodes = grid.nodes()
    h_net = predict_head(res.params, res.meta, sample.values, nodes)
    rel = np.linalg.norm(h_net - h_fd.reshape(-1)) / np.linalg.norm(h_fd)
    assert rel < 0.10

    # PDE linearity: the same network evaluated on K = c approximates the
    # 1/c-scaled unit solution when c stays near the training value
    c = 1.1
    h_c = predict_head(res.params, res.meta, c * sample.values, nodes)
    rel_c = np.linalg.norm(h_c - h_fd.reshape(-1) / c) / \
        np.linalg.norm(h_fd / c)
    assert rel_c < 0.15
