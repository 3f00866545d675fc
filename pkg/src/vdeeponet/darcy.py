"""Label-free operator learning for heterogeneous Darcy flow.

Conductivity fields are sampled as K = exp(F) with F a truncated
Karhunen-Loeve expansion of a squared-exponential Gaussian process on the
grid nodes. A single-channel operator network maps nodal K (the branch
sensors are the full training grid) to the hydraulic head; training
minimizes the discretized flow energy alone, with the head lifted by
x(1-x)y(1-y) so the zero boundary holds identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .deeponet import DeepOnetParams, build_operator_graph, deeponet_forward
from .errors import ArgumentError, ConfigurationError, NumericalError
from .network import (AdamState, TrainingConfig, adam_update, param_bindings,
                      params_from_bindings, xavier_init)
from .oracle import Grid, bilinear_sample


@dataclass(frozen=True)
class KernelSpec:
    l1: float = 0.25
    l2: float = 0.25
    truncation: int = 100

    def __post_init__(self):
        if self.l1 <= 0.0 or self.l2 <= 0.0:
            raise ArgumentError("correlation lengths must be > 0")
        if self.truncation < 1:
            raise ArgumentError("truncation order must be >= 1")


@dataclass(frozen=True)
class ConductivitySample:
    values: np.ndarray       # (nx, ny) nodal K > 0
    seed: int
    coefficients: np.ndarray


_EIG_CACHE: dict = {}


def kl_eigendecomposition(kernel: KernelSpec, grid: Grid):
    """Eigenpairs of the squared-exponential Gram matrix on the grid nodes,
    sorted by decreasing eigenvalue. Jitter 1e-10 guards the factorization."""
    key = (kernel.l1, kernel.l2, grid.nx, grid.ny)
    if key in _EIG_CACHE:
        return _EIG_CACHE[key]
    nodes = grid.nodes()
    dx = nodes[:, 0][:, None] - nodes[:, 0][None, :]
    dy = nodes[:, 1][:, None] - nodes[:, 1][None, :]
    gram = np.exp(-dx ** 2 / (2.0 * kernel.l1 ** 2)
                  - dy ** 2 / (2.0 * kernel.l2 ** 2))
    gram += 1e-10 * np.eye(gram.shape[0])
    eigvals, eigvecs = np.linalg.eigh(gram)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    if eigvals[-1] < -1e-8:
        raise NumericalError(f"Gram matrix indefinite after jitter "
                             f"(min eigenvalue {eigvals[-1]:.3e})")
    eigvals = np.clip(eigvals, 0.0, None)
    _EIG_CACHE[key] = (eigvals, eigvecs)
    return eigvals, eigvecs


def sample_conductivity(kernel: KernelSpec, grid: Grid, seed: int,
                        xi=None) -> ConductivitySample:
    """K = exp(sum_k xi_k sqrt(lambda_k) psi_k) with seeded normal draws.

    Sampling at the grid nodes makes the Nystrom node-weight normalization
    cancel: the field is exactly N(0, Gram) truncated to the leading modes.
    ``xi`` overrides the drawn coefficients (e.g. all-zero gives K = 1).
    """
    eigvals, eigvecs = kl_eigendecomposition(kernel, grid)
    k_trunc = min(kernel.truncation, eigvals.shape[0])
    if xi is None:
        rng = np.random.default_rng(seed)
        xi = rng.standard_normal(k_trunc)
    else:
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape != (k_trunc,):
            raise ArgumentError(f"xi must have shape ({k_trunc},)")
    f = eigvecs[:, :k_trunc] @ (xi * np.sqrt(eigvals[:k_trunc]))
    return ConductivitySample(np.exp(f).reshape(grid.nx, grid.ny), seed, xi)


def darcy_energy(h_values, grad_h, k_values, domain_area: float) -> float:
    """Monte-Carlo flow energy: area times mean of K|grad h|^2 / 2 - h."""
    h = np.asarray(h_values, dtype=np.float64)
    g = np.asarray(grad_h, dtype=np.float64)
    k = np.asarray(k_values, dtype=np.float64)
    if h.shape[0] != g.shape[0] or h.shape[0] != k.shape[0]:
        raise ArgumentError("h, grad h and K point counts differ")
    if domain_area <= 0.0:
        raise ArgumentError("domain_area must be > 0")
    density = 0.5 * k * np.sum(g * g, axis=-1) - h
    return float(domain_area * np.mean(density))


def lift_darcy(raw_h, points) -> np.ndarray:
    """h = x(1-x) y(1-y) h^: zero on the whole boundary by construction."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    poly = pts[:, 0] * (1.0 - pts[:, 0]) * pts[:, 1] * (1.0 - pts[:, 1])
    return poly * np.asarray(raw_h, dtype=np.float64)


def predict_head(params: DeepOnetParams, meta: dict, k_nodal: np.ndarray,
                 points: np.ndarray) -> np.ndarray:
    """Numpy forward + lift for one conductivity field."""
    branch = np.tile(k_nodal.reshape(1, -1) / meta["energy_scale"],
                     (points.shape[0], 1))
    raw = deeponet_forward(params, branch, points)
    return lift_darcy(raw[:, 0], points)


def build_darcy_loss_graph(branch_unique: np.ndarray, points: np.ndarray,
                           k_points: np.ndarray, reps: int, widths_b,
                           widths_t, q: int):
    """Scalar flow-energy graph; grad h comes from the closed-form chain plus
    the product rule through the boundary-lift polynomial."""
    op = build_operator_graph(ad.constant(branch_unique), ad.constant(points),
                              widths_b, widths_t, q, 1, reps=reps)
    x = points[:, :1]
    y = points[:, 1:2]
    px = x * (1.0 - x)
    py = y * (1.0 - y)
    raw = op.raw[0]
    h = ad.multiply(ad.constant(px * py), raw)
    dh_dx = ad.add(ad.multiply(ad.constant((1.0 - 2.0 * x) * py), raw),
                   ad.multiply(ad.constant(px * py), op.d_dx[0]))
    dh_dy = ad.add(ad.multiply(ad.constant(px * (1.0 - 2.0 * y)), raw),
                   ad.multiply(ad.constant(px * py), op.d_dy[0]))
    grad_sq = ad.add(ad.square(dh_dx), ad.square(dh_dy))
    density = ad.subtract(
        ad.multiply(ad.constant(0.5 * k_points.reshape(-1, 1)), grad_sq), h)
    return ad.reduce_mean(density)


@dataclass
class DarcyTrainResult:
    params: DeepOnetParams
    trace: np.ndarray
    meta: dict
    aborted: bool = False


def train_darcy(samples, grid: Grid, collocation_points: np.ndarray,
                config: TrainingConfig, branch_hidden, trunk_hidden, q: int,
                log_every: int = 0) -> DarcyTrainResult:
    """Minimize the mean per-sample flow energy; label-free by contract."""
    if config.lambda_data != 0.0:
        raise ConfigurationError("darcy training is label-free: lambda_data "
                                 "must be 0")
    samples = list(samples)
    if not samples:
        raise ArgumentError("need at least one conductivity sample")
    pts = np.asarray(collocation_points, dtype=np.float64)
    p = pts.shape[0]
    n = len(samples)

    k_ref = max(float(np.max(s.values)) for s in samples)
    branch_unique = np.stack([s.values.reshape(-1) / k_ref for s in samples])
    k_points = np.concatenate([
        bilinear_sample(grid, s.values, pts) for s in samples])
    trunk = np.tile(pts, (n, 1))

    widths_b = (branch_unique.shape[1], *branch_hidden, q)
    widths_t = (2, *trunk_hidden, q)
    root = build_darcy_loss_graph(branch_unique, trunk, k_points, p,
                                  widths_b, widths_t, q)

    branch0 = xavier_init(widths_b, config.seed)
    trunk0 = xavier_init(widths_t, config.seed + 1)
    bindings = {**param_bindings(branch0, "branch"),
                **param_bindings(trunk0, "trunk")}
    state = AdamState()
    trace = np.zeros((config.epochs, 4))
    aborted = False
    last_finite = dict(bindings)
    for epoch in range(config.epochs):
        loss, grads = ad.evaluate_with_gradients(root, bindings)
        trace[epoch] = (epoch, loss, 0.0, loss)
        if not np.isfinite(loss):
            trace = trace[: epoch + 1]
            aborted = True
            break
        last_finite = dict(bindings)
        try:
            bindings, state = adam_update(bindings, grads, state, config)
        except NumericalError:
            trace = trace[: epoch + 1]
            aborted = True
            break
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch}: energy {loss:.6e}")
    final = last_finite if aborted else bindings
    params = DeepOnetParams(params_from_bindings(final, widths_b, "branch"),
                            params_from_bindings(final, widths_t, "trunk"),
                            q, 1)
    meta = {"scenario": "darcy", "layout": "darcy", "displacement_scale": 1.0,
            "energy_scale": k_ref, "dw_lo": 0.0, "dw_hi": 1.0}
    return DarcyTrainResult(params, trace, meta, aborted)
