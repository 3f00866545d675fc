"""Training-set layouts, training orchestration, and sequential rollout.

Three dataset layouts share the triplet structure (branch, trunk, targets):

* ``s1``      branch = previous-step sensor energy (m), trunk = (x, y, dw)
* ``s2``      branch = seeded sensor energy (m), trunk = (x, y, H0)
* ``unified`` branch = two-step window (2m), trunk = (x, y, H0, dw)

Branch rows repeat p times per input function. Sensor energies and the trunk
H0 column share one reference scale ``h_ref``; the trunk load column is
mapped to [0, 1] over the schedule range. The stored branch/trunk matrices
carry the scaled values; the physical load and history columns ride along
unscaled for the lift and the energy density.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import io as vio
from .deeponet import (DeepOnetParams, LiftSpec, apply_lift,
                       build_operator_graph, data_misfit_graph,
                       deeponet_forward, deeponet_from_record,
                       deeponet_to_record, energy_density_graph, lift_graph)
from .errors import (ArgumentError, ConfigurationError, DatasetError,
                     NumericalError, StateError)
from .network import (AdamState, TrainingConfig, adam_update, param_bindings,
                      params_from_bindings, xavier_init)
from .phasefield import (CrackSegment, HistoryField, MaterialParams,
                         initial_history_multi, strain_from_gradients,
                         strain_split, update_history)

LAYOUTS = ("s1", "s2", "unified")
_TRUNK_WIDTH = {"s1": 3, "s2": 3, "unified": 4}


@dataclass(frozen=True)
class SensorSet:
    points: np.ndarray  # (m, 2), fixed across every input function

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ArgumentError("sensor set must be an (m, 2) array")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise ArgumentError("sensors must lie inside the unit square")
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class LoadSchedule:
    deltas: tuple
    scenario: str

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        if not d or any(x <= 0.0 for x in d) or any(
                b <= a for a, b in zip(d, d[1:])):
            raise ArgumentError("schedule must be strictly increasing and > 0")
        object.__setattr__(self, "deltas", d)

    def __len__(self):
        return len(self.deltas)


def dw_scaling(deltas):
    """[0, 1] rescaling constants (lo, hi) over the schedule range."""
    lo, hi = float(min(deltas)), float(max(deltas))
    if hi == lo:
        return 0.0, hi if hi > 0.0 else 1.0
    return lo, hi


def scale_dw(dw, lo, hi):
    return (np.asarray(dw, dtype=np.float64) - lo) / (hi - lo) if hi > lo \
        else np.asarray(dw, dtype=np.float64) / hi


@dataclass(frozen=True)
class TripletDataset:
    layout: str
    branch: np.ndarray   # (n_funcs * p, m or 2m), scaled, rows repeated p times
    trunk: np.ndarray    # (n_funcs * p, 3 or 4), scaled columns
    targets: np.ndarray  # (n_funcs * p, 3)
    dw_phys: np.ndarray  # (n_funcs * p,) applied displacement per row
    h0_phys: np.ndarray  # (n_funcs * p,) seed history at the row's point
    p: int
    n_funcs: int
    m: int
    h_ref: float
    dw_lo: float
    dw_hi: float

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise DatasetError(f"unknown layout '{self.layout}'")
        rows = self.n_funcs * self.p
        if self.branch.shape[0] != rows or self.trunk.shape[0] != rows or \
                self.targets.shape[0] != rows:
            raise DatasetError("branch/trunk/target row counts differ")
        if self.trunk.shape[1] != _TRUNK_WIDTH[self.layout]:
            raise DatasetError(f"{self.layout} trunk must have "
                               f"{_TRUNK_WIDTH[self.layout]} columns")
        expected_b = 2 * self.m if self.layout == "unified" else self.m
        if self.branch.shape[1] != expected_b:
            raise DatasetError(f"{self.layout} branch must have {expected_b} "
                               f"columns for m = {self.m}")
        if self.targets.shape[1] != 3:
            raise DatasetError("targets must have 3 columns (u, v, phi)")

    @property
    def points(self) -> np.ndarray:
        return self.trunk[:, :2]


def _reference_scale(*arrays) -> float:
    peak = max(float(np.max(np.abs(a))) if a.size else 0.0 for a in arrays)
    return peak if peak > 0.0 else 1.0


def assemble_surrogate1(sensor_energies, schedule: LoadSchedule,
                        collocation_points, targets, h0_points=None, *,
                        energy_scale=None) -> TripletDataset:
    """Layout s1: one input function per load step, branch = previous energy.

    ``sensor_energies`` holds steps 0..r-1 (step 0 is the seeded field),
    ``targets`` the fields for steps 1..r at the shared collocation points.
    """
    energies = np.asarray(sensor_energies, dtype=np.float64)
    pts = np.asarray(collocation_points, dtype=np.float64)
    tg = np.asarray(targets, dtype=np.float64)
    r = len(schedule)
    if energies.ndim != 2 or energies.shape[0] != r:
        raise DatasetError(f"need sensor energies for steps 0..{r - 1}, got "
                           f"shape {energies.shape}")
    p = pts.shape[0]
    if tg.shape != (r, p, 3):
        raise DatasetError(f"targets shape {tg.shape} != {(r, p, 3)}")
    m = energies.shape[1]
    h_ref = float(energy_scale) if energy_scale else _reference_scale(energies)
    lo, hi = dw_scaling(schedule.deltas)

    branch = np.repeat(energies / h_ref, p, axis=0)
    dw_phys = np.repeat(np.asarray(schedule.deltas), p)
    trunk = np.column_stack([np.tile(pts, (r, 1)), scale_dw(dw_phys, lo, hi)])
    h0 = np.zeros(p) if h0_points is None else \
        np.asarray(h0_points, dtype=np.float64)
    if h0.shape != (p,):
        raise DatasetError(f"h0_points shape {h0.shape} != ({p},)")
    return TripletDataset("s1", branch, trunk, tg.reshape(r * p, 3), dw_phys,
                          np.tile(h0, r), p, r, m, h_ref, lo, hi)


def assemble_surrogate2(initial_energies, collocation_points, h0_points,
                        targets, delta_w: float, *,
                        energy_scale=None) -> TripletDataset:
    """Layout s2: one input function per crack, fixed applied displacement."""
    energies = np.asarray(initial_energies, dtype=np.float64)
    pts = np.asarray(collocation_points, dtype=np.float64)
    h0 = np.asarray(h0_points, dtype=np.float64)
    tg = np.asarray(targets, dtype=np.float64)
    if energies.ndim != 2:
        raise DatasetError("initial energies must be (n, m)")
    n, m = energies.shape
    p = pts.shape[0]
    if h0.shape != (n, p):
        raise DatasetError(f"h0_points shape {h0.shape} != {(n, p)}")
    if tg.shape != (n, p, 3):
        raise DatasetError(f"targets shape {tg.shape} != {(n, p, 3)}")
    if delta_w <= 0.0:
        raise DatasetError("delta_w must be > 0")
    h_ref = float(energy_scale) if energy_scale else \
        _reference_scale(energies, h0)

    branch = np.repeat(energies / h_ref, p, axis=0)
    trunk = np.column_stack([np.tile(pts, (n, 1)), h0.reshape(-1) / h_ref])
    dw_phys = np.full(n * p, float(delta_w))
    lo, hi = dw_scaling([delta_w])
    return TripletDataset("s2", branch, trunk, tg.reshape(n * p, 3), dw_phys,
                          h0.reshape(-1), p, n, m, h_ref, lo, hi)


def assemble_unified(initial_energies, step_energies, schedule: LoadSchedule,
                     collocation_points, h0_points, targets, *,
                     energy_scale=None) -> TripletDataset:
    """Unified layout: two-step energy windows over s cracks x r steps.

    ``step_energies`` holds the solved sensor energies for steps 1..r-1 per
    crack; the window for step i is [H_{i-1}; H_{i-2}] with H_{-1} := 0.
    """
    h0_sens = np.asarray(initial_energies, dtype=np.float64)
    pts = np.asarray(collocation_points, dtype=np.float64)
    h0 = np.asarray(h0_points, dtype=np.float64)
    tg = np.asarray(targets, dtype=np.float64)
    r = len(schedule)
    if h0_sens.ndim != 2:
        raise DatasetError("initial energies must be (s, m)")
    s, m = h0_sens.shape
    steps = np.asarray(step_energies, dtype=np.float64)
    if r > 1 and steps.shape != (s, r - 1, m):
        raise DatasetError(f"step energies shape {steps.shape} != "
                           f"{(s, r - 1, m)}")
    p = pts.shape[0]
    if h0.shape != (s, p):
        raise DatasetError(f"h0_points shape {h0.shape} != {(s, p)}")
    if tg.shape != (s, r, p, 3):
        raise DatasetError(f"targets shape {tg.shape} != {(s, r, p, 3)}")
    h_ref = float(energy_scale) if energy_scale else \
        _reference_scale(h0_sens, steps if r > 1 else h0_sens, h0)
    lo, hi = dw_scaling(schedule.deltas)

    # per crack j: energies H_0 .. H_{r-1} at sensors
    windows = np.zeros((s, r, 2 * m))
    for j in range(s):
        hist = [h0_sens[j]] + [steps[j, i] for i in range(r - 1)]
        for i in range(r):
            windows[j, i, :m] = hist[i]
            if i >= 1:
                windows[j, i, m:] = hist[i - 1]
    branch = np.repeat(windows.reshape(s * r, 2 * m) / h_ref, p, axis=0)

    dw_phys = np.tile(np.repeat(np.asarray(schedule.deltas), p), s)
    trunk = np.column_stack([
        np.tile(pts, (s * r, 1)),
        np.repeat(h0, r, axis=0).reshape(-1) / h_ref,
        scale_dw(dw_phys, lo, hi),
    ])
    return TripletDataset("unified", branch, trunk, tg.reshape(s * r * p, 3),
                          dw_phys, np.repeat(h0, r, axis=0).reshape(-1),
                          p, s * r, m, h_ref, lo, hi)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkSpec:
    branch_hidden: tuple
    trunk_hidden: tuple
    q: int

    def widths(self, dataset: TripletDataset, channels: int = 3):
        out = channels * self.q
        branch = (dataset.branch.shape[1], *self.branch_hidden, out)
        trunk = (dataset.trunk.shape[1], *self.trunk_hidden, out)
        return branch, trunk


@dataclass
class TrainResult:
    params: DeepOnetParams
    trace: np.ndarray          # columns: epoch, total, data, var
    meta: dict
    aborted: bool = False
    final_loss: float = np.nan


def _unique_branch_rows(dataset: TripletDataset) -> np.ndarray:
    unique = dataset.branch[:: dataset.p]
    if not np.array_equal(np.repeat(unique, dataset.p, axis=0), dataset.branch):
        raise DatasetError("branch rows are not constant within each block")
    return unique


def build_training_graph(dataset: TripletDataset, lift: LiftSpec,
                         material: MaterialParams, config: TrainingConfig,
                         network: NetworkSpec):
    """Scalar hybrid-loss graph over the full dataset; leaves are the weights."""
    widths_b, widths_t = network.widths(dataset)
    unique = _unique_branch_rows(dataset)
    op = build_operator_graph(ad.constant(unique), ad.constant(dataset.trunk),
                              widths_b, widths_t, network.q, 3,
                              reps=dataset.p)
    lifted = lift_graph(op, dataset.points, dataset.dw_phys.reshape(-1, 1),
                        lift.scenario, config.displacement_scale)
    zero = ad.constant(0.0)
    data_node = zero
    if config.lambda_data > 0.0:
        data_node = data_misfit_graph(lifted, dataset.targets,
                                      config.displacement_scale)
    var_node = zero
    if config.lambda_var > 0.0:
        density = energy_density_graph(lifted, dataset.h0_phys, material)
        var_node = ad.reduce_mean(density)
    root = ad.add(ad.scale(data_node, config.lambda_data),
                  ad.scale(var_node, config.lambda_var))
    return root, data_node, var_node, (widths_b, widths_t)


def train(dataset: TripletDataset, lift: LiftSpec, material: MaterialParams,
          config: TrainingConfig, network: NetworkSpec,
          log_every: int = 0) -> TrainResult:
    """Full-batch Adam on the hybrid loss; deterministic given the seed."""
    h_ref = config.energy_scale if config.energy_scale else dataset.h_ref
    root, data_node, var_node, (widths_b, widths_t) = build_training_graph(
        dataset, lift, material, config, network)

    branch0 = xavier_init(widths_b, config.seed)
    trunk0 = xavier_init(widths_t, config.seed + 1)
    bindings = {**param_bindings(branch0, "branch"),
                **param_bindings(trunk0, "trunk")}
    state = AdamState()
    trace = np.zeros((config.epochs, 4))
    aborted = False
    last_finite = dict(bindings)
    loss = np.nan
    for epoch in range(config.epochs):
        loss, grads, (data_v, var_v) = ad.evaluate_with_gradients(
            root, bindings, aux=(data_node, var_node))
        trace[epoch] = (epoch, loss, float(data_v), float(var_v))
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
            print(f"epoch {epoch}: loss {loss:.6e} "
                  f"(data {data_v:.3e}, var {var_v:.3e})")
    final = last_finite if aborted else bindings
    params = DeepOnetParams(params_from_bindings(final, widths_b, "branch"),
                            params_from_bindings(final, widths_t, "trunk"),
                            network.q, 3)
    meta = {"scenario": lift.scenario, "layout": dataset.layout,
            "displacement_scale": config.displacement_scale,
            "energy_scale": h_ref, "dw_lo": dataset.dw_lo,
            "dw_hi": dataset.dw_hi}
    return TrainResult(params, trace, meta, aborted, float(loss))


# ---------------------------------------------------------------------------
# prediction, sensor-energy recomputation, rollout
# ---------------------------------------------------------------------------

def _lift_graph_on_leaf(op, coords: ad.Node, dw: float, scenario: str,
                        s_u: float):
    """Symbolic lift with the coordinates as a differentiable leaf."""
    x = ad.slice_cols(coords, 0, 1)
    y = ad.slice_cols(coords, 1, 2)
    one = ad.constant(1.0)
    raw_u, raw_v, _ = op.raw
    if scenario == "tensile":
        u = ad.scale(ad.multiply(ad.multiply(x, ad.subtract(one, x)), raw_u), s_u)
        v = ad.add(
            ad.scale(ad.multiply(ad.multiply(y, ad.subtract(y, one)), raw_v), s_u),
            ad.scale(y, dw))
    elif scenario == "shear":
        u = ad.add(
            ad.scale(ad.multiply(ad.multiply(y, ad.subtract(one, y)), raw_u), s_u),
            ad.scale(y, dw))
        v = ad.scale(ad.multiply(
            ad.multiply(ad.multiply(y, ad.subtract(y, one)),
                        ad.multiply(x, ad.subtract(x, one))), raw_v), s_u)
    else:
        raise ArgumentError(f"no fracture lift for scenario '{scenario}'")
    return u, v


def predict_fields(params: DeepOnetParams, meta: dict, branch_row: np.ndarray,
                   points: np.ndarray, h0_points: np.ndarray, delta_w: float):
    """Numpy forward + lift at arbitrary points for one input function."""
    n = points.shape[0]
    trunk = _trunk_matrix(meta, points, h0_points, delta_w)
    branch = np.tile(branch_row, (n, 1))
    raw = deeponet_forward(params, branch, trunk)
    return apply_lift(raw, points, LiftSpec(meta["scenario"], delta_w),
                      meta["displacement_scale"])


def _trunk_matrix(meta: dict, points: np.ndarray, h0_points: np.ndarray,
                  delta_w: float) -> np.ndarray:
    layout = meta["layout"]
    h_ref = meta["energy_scale"]
    cols = [points]
    if layout in ("s2", "unified"):
        cols.append(np.asarray(h0_points).reshape(-1, 1) / h_ref)
    if layout in ("s1", "unified"):
        dw_col = scale_dw(np.full(points.shape[0], delta_w), meta["dw_lo"],
                          meta["dw_hi"])
        cols.append(dw_col.reshape(-1, 1))
    return np.column_stack(cols)


def recompute_sensor_energy(params: DeepOnetParams, meta: dict,
                            branch_row: np.ndarray, sensors: SensorSet,
                            material: MaterialParams, h0_sensors: np.ndarray,
                            delta_w: float) -> np.ndarray:
    """Tensile energy at the sensors from coordinate gradients of the lift.

    The sensor coordinates enter the graph as a differentiable leaf; the
    displacement gradients are reverse-mode gradients of the summed lifted
    outputs with respect to that leaf.
    """
    pts = sensors.points
    if np.any(pts < 0.0) or np.any(pts > 1.0):
        raise ArgumentError("sensors must lie inside the unit square")
    n_rows = pts.shape[0]
    layout = meta["layout"]
    h_ref = meta["energy_scale"]
    s_u = meta["displacement_scale"]

    coords = ad.leaf("coords", (n_rows, 2))
    extra = []
    if layout in ("s2", "unified"):
        extra.append(np.asarray(h0_sensors).reshape(-1, 1) / h_ref)
    if layout in ("s1", "unified"):
        extra.append(scale_dw(np.full((n_rows, 1), delta_w), meta["dw_lo"],
                              meta["dw_hi"]))
    trunk_node = ad.concat_cols([coords] + [ad.constant(e) for e in extra]) \
        if extra else coords

    widths_b = params.branch.widths
    widths_t = params.trunk.widths
    op = build_operator_graph(
        ad.constant(branch_row.reshape(1, -1)), trunk_node,
        widths_b, widths_t, params.q, params.channels, reps=n_rows,
        with_coord_derivs=False)
    u, v = _lift_graph_on_leaf(op, coords, delta_w, meta["scenario"], s_u)

    bindings = {**param_bindings(params.branch, "branch"),
                **param_bindings(params.trunk, "trunk"), "coords": pts}
    _, g_u = ad.evaluate_with_gradients(ad.reduce_sum(u), bindings)
    _, g_v = ad.evaluate_with_gradients(ad.reduce_sum(v), bindings)
    strain = strain_from_gradients(g_u["coords"][:, 0], g_u["coords"][:, 1],
                                   g_v["coords"][:, 0], g_v["coords"][:, 1])
    psi_plus, _ = strain_split(strain, material)
    return psi_plus


@dataclass
class RolloutStep:
    step: int
    delta_w: float
    prediction: object          # FieldPrediction at the evaluation points
    sensor_history: np.ndarray  # clamped per-sensor history after this step
    sensor_psi: np.ndarray      # raw recomputed tensile energy


def rollout(params: DeepOnetParams, meta: dict, cracks, schedule: LoadSchedule,
            eval_points: np.ndarray, sensors: SensorSet,
            material: MaterialParams, b_scalar: float = 1000.0):
    """Sequential prediction feeding recomputed sensor energies forward.

    Step 1 pads the branch window with zeros; later steps use the clamped
    history of the previous two steps. Emits one :class:`RolloutStep` per
    schedule entry.
    """
    if meta["layout"] != "unified":
        raise StateError("rollout needs a unified-layout checkpoint")
    if len(schedule) == 0:
        raise ArgumentError("schedule is empty")
    h_ref = meta["energy_scale"]
    m = sensors.m
    h0_sens = initial_history_multi(sensors.points, cracks, material, b_scalar)
    h0_pts = initial_history_multi(eval_points, cracks, material, b_scalar)

    hist = HistoryField(sensors.points, h0_sens.copy(), step=0)
    prev = h0_sens.copy()
    prev2 = np.zeros(m)
    steps = []
    for k, delta_w in enumerate(schedule.deltas, start=1):
        branch_row = np.concatenate([prev, prev2]) / h_ref
        prediction = predict_fields(params, meta, branch_row, eval_points,
                                    h0_pts, delta_w)
        psi = recompute_sensor_energy(params, meta, branch_row,
                                      sensors, material, h0_sens, delta_w)
        hist = update_history(hist, psi)
        steps.append(RolloutStep(k, delta_w, prediction, hist.values.copy(),
                                 psi))
        prev2 = prev
        prev = hist.values.copy()
    return steps


# ---------------------------------------------------------------------------
# sensor layout generators and dataset loading
# ---------------------------------------------------------------------------

def sensors_near_crack_band(m: int, seed: int, y_center: float = 0.5,
                            half_width: float = 0.15) -> np.ndarray:
    """Sensors in a horizontal band around the crack plane (tensile runs)."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, m)
    y = rng.uniform(max(0.0, y_center - half_width),
                    min(1.0, y_center + half_width), m)
    return np.column_stack([x, y])


def sensors_region(m: int, seed: int, x_range=(0.0, 0.65),
                   y_range=(0.0, 1.0)) -> np.ndarray:
    """Uniform sensors over a rectangle (shear family of experiments)."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(x_range[0], x_range[1], m)
    y = rng.uniform(y_range[0], y_range[1], m)
    return np.column_stack([x, y])


def load_generated_dataset(data_dir: str, layout: str,
                           material: MaterialParams, *,
                           b_scalar: float = 1000.0, points_cap: int = 0,
                           seed: int = 0, energy_scale=None) -> TripletDataset:
    """Assemble a TripletDataset from :func:`vdeeponet.oracle.generate_dataset`
    output files; ``points_cap`` subsamples the collocation points."""
    manifest = vio.read_json(os.path.join(data_dir, "manifest.json"))
    schedule = LoadSchedule(tuple(manifest["schedule"]), manifest["scenario"])
    cracks = [
        [CrackSegment(seg[0][0], seg[0][1], seg[1][0], seg[1][1])
         for seg in entry]
        for entry in manifest["cracks"]]
    s = len(cracks)
    r = len(schedule)
    sensors = vio.read_sensors_csv(os.path.join(data_dir, "sensors.csv"))

    def energies(ci, k):
        _, psi = vio.read_energy_csv(
            os.path.join(data_dir, f"energy_crack{ci:02d}_step{k:02d}.csv"))
        return psi

    def fields(ci, k):
        pts, u, v, phi = vio.read_fields_csv(
            os.path.join(data_dir, f"fields_crack{ci:02d}_step{k:02d}.csv"))
        return pts, np.column_stack([u, v, phi])

    pts0, _ = fields(0, 1)
    if points_cap and points_cap < pts0.shape[0]:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(pts0.shape[0], size=points_cap,
                                  replace=False))
    else:
        pick = np.arange(pts0.shape[0])
    pts = pts0[pick]

    h0_pts = np.stack([
        initial_history_multi(pts, crack_list, material, b_scalar)
        for crack_list in cracks])
    targets = np.stack([
        np.stack([fields(ci, k)[1][pick] for k in range(1, r + 1)])
        for ci in range(s)])

    if layout == "s2":
        if r != 1:
            raise DatasetError("s2 layout expects a single-step schedule")
        init = np.stack([energies(ci, 0) for ci in range(s)])
        return assemble_surrogate2(init, pts, h0_pts, targets[:, 0],
                                   schedule.deltas[0],
                                   energy_scale=energy_scale)
    if layout == "s1":
        if s != 1:
            raise DatasetError("s1 layout expects a single crack configuration")
        sens = np.stack([energies(0, k) for k in range(r)])
        return assemble_surrogate1(sens, schedule, pts, targets[0],
                                   h0_points=h0_pts[0],
                                   energy_scale=energy_scale)
    if layout == "unified":
        init = np.stack([energies(ci, 0) for ci in range(s)])
        step_e = np.stack([
            np.stack([energies(ci, k) for k in range(1, r)])
            for ci in range(s)]) if r > 1 else np.zeros((s, 0, sensors.shape[0]))
        return assemble_unified(init, step_e, schedule, pts, h0_pts, targets,
                                energy_scale=energy_scale)
    raise DatasetError(f"unknown layout '{layout}'")


def save_checkpoint(path: str, result: TrainResult) -> None:
    vio.write_json(path, deeponet_to_record(
        result.params, result.meta["scenario"], result.meta["layout"],
        result.meta["displacement_scale"], result.meta["energy_scale"],
        result.meta["dw_lo"], result.meta["dw_hi"]))


def load_checkpoint(path: str):
    if not os.path.exists(path):
        raise StateError(f"checkpoint '{path}' does not exist")
    return deeponet_from_record(vio.read_json(path))
