"""Branch/trunk operator networks with exact Dirichlet lifting.

The branch and trunk embeddings (each ``channels * q`` wide) are partitioned
into ``channels`` contiguous blocks of width ``q``; channel ``c`` of the
operator output is the dot product of block ``c`` of both embeddings. Raw
elastic channels are multiplied by the displacement scale ``s_u`` and lifted
so the scenario's Dirichlet values hold identically; no boundary term appears
in any loss.

Besides the plain numpy forward pass, this module builds the symbolic loss
graph used for training. Spatial derivatives of the outputs (needed by the
energy term) are propagated in closed form through the tanh layers, so a
single reverse sweep over the graph yields exact parameter gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ArgumentError, ConfigurationError, ShapeError
from .network import MlpParams, mlp_forward, mlp_graph_layers, param_bindings
from .phasefield import MaterialParams

SCENARIOS = ("tensile", "shear", "darcy")


@dataclass(frozen=True)
class DeepOnetParams:
    branch: MlpParams
    trunk: MlpParams
    q: int
    channels: int

    def __post_init__(self):
        width = self.q * self.channels
        if self.branch.out_width != width or self.trunk.out_width != width:
            raise ConfigurationError(
                f"embedding widths {self.branch.out_width}/{self.trunk.out_width} "
                f"must equal channels*q = {width}")


@dataclass(frozen=True)
class LiftSpec:
    scenario: str
    delta: float = 0.0  # applied boundary displacement (mm); unused for darcy

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ArgumentError(f"unknown scenario '{self.scenario}'")
        if not np.isfinite(self.delta) or self.delta < 0.0:
            raise ArgumentError("applied displacement must be finite and >= 0")


@dataclass(frozen=True)
class LossWeights:
    lambda_data: float
    lambda_var: float

    def __post_init__(self):
        if self.lambda_data < 0.0 or self.lambda_var < 0.0:
            raise ArgumentError("loss weights must be >= 0")
        if self.lambda_data == 0.0 and self.lambda_var == 0.0:
            raise ArgumentError("loss weights cannot both be zero")


@dataclass(frozen=True)
class FieldPrediction:
    points: np.ndarray  # (n, 2)
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray     # raw network phase output, not clipped


# ---------------------------------------------------------------------------
# numpy forward path
# ---------------------------------------------------------------------------

def combine_embeddings(b_emb: np.ndarray, t_emb: np.ndarray, q: int,
                       channels: int) -> np.ndarray:
    """Blockwise dot products: output (n, channels)."""
    if b_emb.shape != t_emb.shape or b_emb.shape[1] != q * channels:
        raise ConfigurationError(
            f"embedding shapes {b_emb.shape}/{t_emb.shape} do not match "
            f"channels*q = {q * channels}")
    n = b_emb.shape[0]
    prod = (b_emb * t_emb).reshape(n, channels, q)
    return prod.sum(axis=2)


def deeponet_forward(params: DeepOnetParams, branch_batch: np.ndarray,
                     trunk_batch: np.ndarray) -> np.ndarray:
    """Raw per-point channel values (no scaling, no lifting)."""
    branch_batch = np.asarray(branch_batch, dtype=np.float64)
    trunk_batch = np.asarray(trunk_batch, dtype=np.float64)
    if branch_batch.shape[0] != trunk_batch.shape[0]:
        raise ShapeError("branch and trunk batches must have equal row counts")
    b_emb = mlp_forward(params.branch, branch_batch)
    t_emb = mlp_forward(params.trunk, trunk_batch)
    return combine_embeddings(b_emb, t_emb, params.q, params.channels)


def apply_lift_tensile(raw: np.ndarray, points: np.ndarray, delta_v: float,
                       s_u: float) -> FieldPrediction:
    """u = x(1-x) u^ s_u;  v = y(y-1) v^ s_u + y dv;  phi passes through."""
    x, y = points[:, 0], points[:, 1]
    u = x * (1.0 - x) * raw[:, 0] * s_u
    v = y * (y - 1.0) * raw[:, 1] * s_u + y * delta_v
    return FieldPrediction(points, u, v, raw[:, 2].copy())


def apply_lift_shear(raw: np.ndarray, points: np.ndarray, delta_u: float,
                     s_u: float) -> FieldPrediction:
    """u = y(1-y) u^ s_u + y du;  v = y(y-1) x(x-1) v^ s_u;  phi passes through."""
    x, y = points[:, 0], points[:, 1]
    u = y * (1.0 - y) * raw[:, 0] * s_u + y * delta_u
    v = y * (y - 1.0) * x * (x - 1.0) * raw[:, 1] * s_u
    return FieldPrediction(points, u, v, raw[:, 2].copy())


def apply_lift(raw: np.ndarray, points: np.ndarray, lift: LiftSpec,
               s_u: float) -> FieldPrediction:
    if lift.scenario == "tensile":
        return apply_lift_tensile(raw, points, lift.delta, s_u)
    if lift.scenario == "shear":
        return apply_lift_shear(raw, points, lift.delta, s_u)
    raise ArgumentError(f"no fracture lift for scenario '{lift.scenario}'")


def data_misfit(predictions: FieldPrediction, targets: np.ndarray,
                s_u: float) -> float:
    """MSE over points and channels; elastic channels scaled down by s_u."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (predictions.u.shape[0], 3):
        raise ShapeError(f"targets shape {targets.shape} does not match "
                         f"({predictions.u.shape[0]}, 3)")
    se = ((predictions.u - targets[:, 0]) ** 2 / s_u ** 2
          + (predictions.v - targets[:, 1]) ** 2 / s_u ** 2
          + (predictions.phi - targets[:, 2]) ** 2)
    return float(np.mean(se) / 3.0)


def hybrid_loss(predictions: FieldPrediction | None, targets, energy: float,
                weights: LossWeights, s_u: float = 1.0) -> float:
    """lambda1 * channel-scaled MSE + lambda2 * variational energy."""
    data = 0.0
    if weights.lambda_data > 0.0:
        if targets is None:
            raise ConfigurationError("lambda_data > 0 requires targets")
        data = data_misfit(predictions, targets, s_u)
    return weights.lambda_data * data + weights.lambda_var * float(energy)


# ---------------------------------------------------------------------------
# symbolic graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorGraph:
    """Raw channel nodes plus their spatial-derivative nodes, all (N, 1)."""
    raw: tuple        # per channel
    d_dx: tuple
    d_dy: tuple
    branch_leaves: dict
    trunk_leaves: dict


def _coordinate_seed(n_rows: int, n_cols: int, column: int) -> ad.Node:
    seed = np.zeros((n_rows, n_cols))
    seed[:, column] = 1.0
    return ad.constant(seed)


def _propagate_derivative(seed: ad.Node, one_minus_sq, weight_leaves) -> ad.Node:
    """Chain d(tanh(z W + b))/dc = (1 - out^2) * (d_in @ W) through all layers."""
    d = seed
    for oms, w in zip(one_minus_sq, weight_leaves):
        d = ad.multiply(oms, ad.matmul(d, w))
    return d


def build_operator_graph(branch_input: ad.Node, trunk_input: ad.Node,
                         branch_widths, trunk_widths, q: int, channels: int,
                         reps: int = 1,
                         with_coord_derivs: bool = True) -> OperatorGraph:
    """Symbolic branch/trunk composition with per-channel coordinate derivatives.

    ``branch_input`` holds one row per input function; rows are repeated
    ``reps`` times after embedding to align with the trunk batch. Coordinate
    derivatives (seeded on the first two trunk columns) can be skipped when
    the caller differentiates through a coordinate leaf instead.
    """
    if branch_widths[-1] != q * channels or trunk_widths[-1] != q * channels:
        raise ConfigurationError("final widths must equal channels*q")
    b_act, _ = mlp_graph_layers(branch_input, branch_widths, "branch")
    b_emb = b_act[-1] if reps == 1 else ad.repeat_rows(b_act[-1], reps)
    t_act, t_ws = mlp_graph_layers(trunk_input, trunk_widths, "trunk")
    t_emb = t_act[-1]

    def split_channels(combined):
        return tuple(ad.slice_cols(combined, c, c + 1) for c in range(channels))

    raw = split_channels(ad.channel_dot(b_emb, t_emb, channels))
    d_dx = d_dy = ()
    if with_coord_derivs:
        n_rows, n_cols = trunk_input.shape
        one_minus_sq = [ad.subtract(ad.constant(1.0), ad.square(z))
                        for z in t_act[1:]]
        dt_dx = _propagate_derivative(_coordinate_seed(n_rows, n_cols, 0),
                                      one_minus_sq, t_ws)
        dt_dy = _propagate_derivative(_coordinate_seed(n_rows, n_cols, 1),
                                      one_minus_sq, t_ws)
        d_dx = split_channels(ad.channel_dot(b_emb, dt_dx, channels))
        d_dy = split_channels(ad.channel_dot(b_emb, dt_dy, channels))
    return OperatorGraph(raw, d_dx, d_dy,
                         ad.graph_leaves(b_emb), ad.graph_leaves(t_emb))


@dataclass(frozen=True)
class LiftedGraph:
    u: ad.Node
    v: ad.Node
    phi: ad.Node        # raw phase channel
    du_dx: ad.Node
    du_dy: ad.Node
    dv_dx: ad.Node
    dv_dy: ad.Node
    dphi_dx: ad.Node
    dphi_dy: ad.Node


def lift_graph(op: OperatorGraph, points: np.ndarray, dw: np.ndarray,
               scenario: str, s_u: float) -> LiftedGraph:
    """Symbolic lift of the three raw channels plus its exact derivatives.

    ``dw`` is the physical applied displacement per row (column vector).
    """
    x = points[:, :1]
    y = points[:, 1:2]
    raw_u, raw_v, raw_phi = op.raw
    if scenario == "tensile":
        px, py = x * (1.0 - x), y * (y - 1.0)
        u = ad.multiply(ad.constant(s_u * px), raw_u)
        du_dx = ad.add(ad.multiply(ad.constant(s_u * (1.0 - 2.0 * x)), raw_u),
                       ad.multiply(ad.constant(s_u * px), op.d_dx[0]))
        du_dy = ad.multiply(ad.constant(s_u * px), op.d_dy[0])
        v = ad.add(ad.multiply(ad.constant(s_u * py), raw_v),
                   ad.constant(y * dw))
        dv_dy = ad.add(
            ad.add(ad.multiply(ad.constant(s_u * (2.0 * y - 1.0)), raw_v),
                   ad.multiply(ad.constant(s_u * py), op.d_dy[1])),
            ad.constant(dw))
        dv_dx = ad.multiply(ad.constant(s_u * py), op.d_dx[1])
    elif scenario == "shear":
        pu, pv = y * (1.0 - y), y * (y - 1.0) * x * (x - 1.0)
        u = ad.add(ad.multiply(ad.constant(s_u * pu), raw_u),
                   ad.constant(y * dw))
        du_dy = ad.add(
            ad.add(ad.multiply(ad.constant(s_u * (1.0 - 2.0 * y)), raw_u),
                   ad.multiply(ad.constant(s_u * pu), op.d_dy[0])),
            ad.constant(dw))
        du_dx = ad.multiply(ad.constant(s_u * pu), op.d_dx[0])
        v = ad.multiply(ad.constant(s_u * pv), raw_v)
        dv_dx = ad.add(
            ad.multiply(ad.constant(s_u * y * (y - 1.0) * (2.0 * x - 1.0)), raw_v),
            ad.multiply(ad.constant(s_u * pv), op.d_dx[1]))
        dv_dy = ad.add(
            ad.multiply(ad.constant(s_u * x * (x - 1.0) * (2.0 * y - 1.0)), raw_v),
            ad.multiply(ad.constant(s_u * pv), op.d_dy[1]))
    else:
        raise ArgumentError(f"no fracture lift for scenario '{scenario}'")
    return LiftedGraph(u, v, raw_phi, du_dx, du_dy, dv_dx, dv_dy,
                       op.d_dx[2], op.d_dy[2])


def strain_split_graph(lifted: LiftedGraph, material: MaterialParams):
    """Symbolic tensile/compressive split of the lifted strain field."""
    exx = lifted.du_dx
    eyy = lifted.dv_dy
    exy = ad.scale(ad.add(lifted.du_dy, lifted.dv_dx), 0.5)
    mean = ad.scale(ad.add(exx, eyy), 0.5)
    radius = ad.sqrt(ad.add(ad.square(ad.scale(ad.subtract(exx, eyy), 0.5)),
                            ad.square(exy)))
    lam1 = ad.add(mean, radius)
    lam2 = ad.subtract(mean, radius)
    lam_s = ad.add(exx, eyy)

    def pos_sq(z):
        return ad.square(ad.add(z, ad.absolute(z)))

    def neg_sq(z):
        return ad.square(ad.subtract(z, ad.absolute(z)))

    nu, mu = material.nu_lame, material.mu_lame
    psi_plus = ad.add(ad.scale(pos_sq(lam_s), nu / 8.0),
                      ad.scale(ad.add(pos_sq(lam1), pos_sq(lam2)), mu / 4.0))
    psi_minus = ad.add(ad.scale(neg_sq(lam_s), nu / 8.0),
                       ad.scale(ad.add(neg_sq(lam1), neg_sq(lam2)), mu / 4.0))
    return psi_plus, psi_minus


def energy_density_graph(lifted: LiftedGraph, history: np.ndarray,
                         material: MaterialParams) -> ad.Node:
    """Per-row f_e + f_c of the lifted prediction; history is a fixed field."""
    phi_c = ad.clamp01(lifted.phi)
    g = ad.square(ad.subtract(ad.constant(1.0), phi_c))
    psi_plus, psi_minus = strain_split_graph(lifted, material)
    f_e = ad.add(ad.multiply(g, psi_plus), psi_minus)
    grad_sq = ad.add(ad.square(lifted.dphi_dx), ad.square(lifted.dphi_dy))
    surface = ad.scale(ad.add(ad.square(phi_c),
                              ad.scale(grad_sq, material.l_0 ** 2)),
                       material.g_c / (2.0 * material.l_0))
    f_c = ad.add(surface, ad.multiply(g, ad.constant(history.reshape(-1, 1))))
    return ad.add(f_e, f_c)


def data_misfit_graph(lifted: LiftedGraph, targets: np.ndarray,
                      s_u: float) -> ad.Node:
    """Symbolic channel-scaled MSE against fixed targets."""
    err_u = ad.subtract(lifted.u, ad.constant(targets[:, :1]))
    err_v = ad.subtract(lifted.v, ad.constant(targets[:, 1:2]))
    err_p = ad.subtract(lifted.phi, ad.constant(targets[:, 2:3]))
    scaled = ad.add(
        ad.add(ad.scale(ad.reduce_mean(ad.square(err_u)), 1.0 / s_u ** 2),
               ad.scale(ad.reduce_mean(ad.square(err_v)), 1.0 / s_u ** 2)),
        ad.reduce_mean(ad.square(err_p)))
    return ad.scale(scaled, 1.0 / 3.0)


# ---------------------------------------------------------------------------
# checkpoint records
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def deeponet_to_record(params: DeepOnetParams, scenario: str, layout: str,
                       s_u: float, h_ref: float, dw_lo: float,
                       dw_hi: float) -> dict:
    from .network import mlp_to_record
    return {
        "format_version": CHECKPOINT_VERSION,
        "scenario": scenario,
        "layout": layout,
        "q": params.q,
        "channels": params.channels,
        "displacement_scale": s_u,
        "energy_scale": h_ref,
        "dw_lo": dw_lo,
        "dw_hi": dw_hi,
        "branch": mlp_to_record(params.branch),
        "trunk": mlp_to_record(params.trunk),
    }


def deeponet_from_record(record: dict):
    from .network import mlp_from_record
    if record.get("format_version") != CHECKPOINT_VERSION:
        raise ConfigurationError(
            f"unsupported checkpoint format {record.get('format_version')}")
    params = DeepOnetParams(mlp_from_record(record["branch"]),
                            mlp_from_record(record["trunk"]),
                            int(record["q"]), int(record["channels"]))
    meta = {k: record[k] for k in ("scenario", "layout", "displacement_scale",
                                   "energy_scale", "dw_lo", "dw_hi")}
    return params, meta
