"""Command-line orchestration: generate, train, predict, rollout, check-grad.

Exit codes: 0 success, 2 configuration error, 3 solver/training failure,
4 I/O failure. Diagnostics go to stderr; numeric results go to files only.
``VDEEPONET_THREADS`` caps internal (numba) parallelism; 0 or unset = auto.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as vio
from ._kernels import numba_available
from .config import RunConfig, load_config
from .darcy import KernelSpec, predict_head, sample_conductivity, train_darcy
from .deeponet import LiftSpec
from .errors import (ArgumentError, ConfigurationError, DatasetError,
                     NumericalError, StateError, VdonError)
from .gradcheck import run_gradient_check
from .io import IOFailure
from .network import TrainingConfig
from .oracle import Grid, generate_dataset
from .phasefield import initial_history_multi
from .surrogate import (LoadSchedule, SensorSet, load_checkpoint,
                        load_generated_dataset, predict_fields, rollout,
                        save_checkpoint, train)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _log(*parts):
    print(*parts, file=sys.stderr)


def _apply_thread_cap():
    raw = os.environ.get("VDEEPONET_THREADS", "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"VDEEPONET_THREADS='{raw}' is not an integer")
    if n < 0:
        raise ConfigurationError("VDEEPONET_THREADS must be >= 0")
    if n > 0 and numba_available():
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _read_sensors(cfg: RunConfig) -> SensorSet:
    path = cfg.path("sensor_file")
    if not os.path.exists(path):
        raise IOFailure(f"sensor file '{path}' does not exist")
    return SensorSet(vio.read_sensors_csv(path))


def _eval_points(cfg: RunConfig, n_points: int, seed: int) -> np.ndarray:
    grid = cfg.grid
    nodes = grid.nodes()
    if n_points and n_points < nodes.shape[0]:
        rng = np.random.default_rng(seed)
        return nodes[np.sort(rng.choice(nodes.shape[0], n_points,
                                        replace=False))]
    return nodes


def cmd_generate(cfg: RunConfig, out_dir: str, seed: int) -> int:
    os.makedirs(out_dir, exist_ok=True)
    if cfg.scenario == "darcy":
        opts = cfg.darcy_options
        kernel = KernelSpec(opts["l1"], opts["l2"], opts["truncation"])
        grid = cfg.grid
        nodes = grid.nodes()
        names = []
        for i in range(opts["n_samples"]):
            sample = sample_conductivity(kernel, grid,
                                         opts["sample_seed"] + i)
            name = f"conductivity_{i:03d}.csv"
            vio.write_csv(os.path.join(out_dir, name), "x,y,K",
                          [nodes[:, 0], nodes[:, 1],
                           sample.values.reshape(-1)])
            names.append(name)
        manifest = vio.write_manifest(
            os.path.join(out_dir, "manifest.json"),
            {"format_version": 1, "scenario": "darcy",
             "grid": {"nx": grid.nx, "ny": grid.ny},
             "kernel": {"l1": kernel.l1, "l2": kernel.l2,
                        "truncation": kernel.truncation},
             "n_samples": opts["n_samples"],
             "sample_seed": opts["sample_seed"], "seed": seed}, names)
    else:
        sensors = _read_sensors(cfg)
        manifest = generate_dataset(
            out_dir, cfg.scenario, [[c] for c in cfg.cracks],
            cfg.schedule.deltas, cfg.grid, cfg.material, sensors.points,
            b_scalar=cfg.b_scalar, seed=seed, **cfg.oracle_options)
    _log(f"generated dataset in {out_dir} "
         f"(content hash {manifest['content_hash'][:16]})")
    return EXIT_OK


def cmd_train(cfg: RunConfig, out_dir: str, seed: int) -> int:
    os.makedirs(out_dir, exist_ok=True)
    training = cfg.training
    if seed != cfg.seed:
        training = TrainingConfig(**{**cfg.raw.get("training", {}),
                                     "seed": seed})
    if cfg.scenario == "darcy":
        if training.lambda_data != 0.0:
            raise ConfigurationError("darcy training is label-free: set "
                                     "training.lambda_data to 0")
        opts = cfg.darcy_options
        kernel = KernelSpec(opts["l1"], opts["l2"], opts["truncation"])
        grid = cfg.grid
        samples = [sample_conductivity(kernel, grid, opts["sample_seed"] + i)
                   for i in range(opts["n_samples"])]
        rng = np.random.default_rng(seed)
        p = cfg.points_cap or 1000
        points = rng.uniform(0.0, 1.0, size=(p, 2))
        net = cfg.network
        result = train_darcy(samples, grid, points, training,
                             net.branch_hidden, net.trunk_hidden, net.q)
        trace, meta, params = result.trace, result.meta, result.params
        aborted = result.aborted
    else:
        dataset = load_generated_dataset(
            cfg.data_dir, cfg.layout, cfg.material, b_scalar=cfg.b_scalar,
            points_cap=cfg.points_cap, seed=seed,
            energy_scale=training.energy_scale)
        lift = LiftSpec(cfg.scenario, cfg.schedule.deltas[-1])
        result = train(dataset, lift, cfg.material, training, cfg.network)
        trace, meta, params = result.trace, result.meta, result.params
        aborted = result.aborted

    vio.write_csv(os.path.join(out_dir, "loss_trace.csv"),
                  "epoch,total,data,var",
                  [trace[:, 0], trace[:, 1], trace[:, 2], trace[:, 3]])
    save_checkpoint(os.path.join(out_dir, "checkpoint.json"), result)
    if aborted:
        _log("training aborted on non-finite loss; last finite checkpoint "
             "retained")
        return EXIT_SOLVER
    _log(f"trained {meta['layout']}/{meta['scenario']}: final loss "
         f"{trace[-1, 1]:.6e} ({trace.shape[0]} epochs)")
    return EXIT_OK


def _branch_row_for(cfg: RunConfig, meta: dict, sensors: SensorSet,
                    cracks) -> np.ndarray:
    h0_sens = initial_history_multi(sensors.points, cracks, cfg.material,
                                    cfg.b_scalar)
    h_ref = meta["energy_scale"]
    if meta["layout"] == "unified":
        return np.concatenate([h0_sens, np.zeros(sensors.m)]) / h_ref
    return h0_sens / h_ref


def cmd_predict(cfg: RunConfig, checkpoint: str, out_dir: str, seed: int,
                n_points: int) -> int:
    os.makedirs(out_dir, exist_ok=True)
    params, meta = load_checkpoint(checkpoint)
    if meta["scenario"] != cfg.scenario:
        raise ConfigurationError(
            f"checkpoint scenario '{meta['scenario']}' does not match config "
            f"'{cfg.scenario}'")
    if cfg.scenario == "darcy":
        opts = cfg.darcy_options
        kernel = KernelSpec(opts["l1"], opts["l2"], opts["truncation"])
        grid = cfg.grid
        sample = sample_conductivity(kernel, grid, seed)
        points = _eval_points(cfg, n_points, seed)
        head = predict_head(params, meta, sample.values, points)
        vio.write_csv(os.path.join(out_dir, "prediction.csv"), "x,y,h",
                      [points[:, 0], points[:, 1], head])
        _log(f"wrote darcy prediction for sample seed {seed}")
        return EXIT_OK

    predict_cfg = cfg.raw.get("predict", {})
    if "crack" in predict_cfg:
        seg = predict_cfg["crack"]
        from .phasefield import CrackSegment
        cracks = [CrackSegment(seg[0][0], seg[0][1], seg[1][0], seg[1][1])]
    else:
        cracks = cfg.cracks[:1]
    delta_w = float(predict_cfg.get("delta_w", cfg.schedule.deltas[-1]))
    sensors = _read_sensors(cfg)
    points = _eval_points(cfg, n_points, seed)
    h0_pts = initial_history_multi(points, cracks, cfg.material, cfg.b_scalar)
    branch_row = _branch_row_for(cfg, meta, sensors, cracks)
    pred = predict_fields(params, meta, branch_row, points, h0_pts, delta_w)
    vio.write_fields_csv(os.path.join(out_dir, "prediction.csv"), points,
                         pred.u, pred.v, pred.phi)
    _log(f"wrote prediction for delta_w = {delta_w}")
    return EXIT_OK


def cmd_rollout(cfg: RunConfig, checkpoint: str, out_dir: str, seed: int,
                n_points: int) -> int:
    os.makedirs(out_dir, exist_ok=True)
    params, meta = load_checkpoint(checkpoint)
    if meta["layout"] != "unified":
        raise StateError("rollout needs a unified-layout checkpoint")
    sensors = _read_sensors(cfg)
    points = _eval_points(cfg, n_points, seed)
    cracks = cfg.cracks[:1]
    _log(f"rollout step 1 branch: seeded sensor energy padded with "
         f"{sensors.m} zeros")
    steps = rollout(params, meta, cracks, cfg.schedule, points, sensors,
                    cfg.material, cfg.b_scalar)
    for step in steps:
        vio.write_fields_csv(
            os.path.join(out_dir, f"rollout_step{step.step:02d}.csv"),
            points, step.prediction.u, step.prediction.v, step.prediction.phi)
        vio.write_energy_csv(
            os.path.join(out_dir, f"rollout_energy_step{step.step:02d}.csv"),
            sensors.points, step.sensor_history)
    _log(f"rollout complete: {len(steps)} steps")
    return EXIT_OK


def cmd_check_grad(seed: int, inject_error: bool) -> int:
    report = run_gradient_check(seed=seed, n_graphs=100,
                                inject_error=inject_error)
    _log(f"gradient check: {report.n_graphs} graphs, max relative error "
         f"{report.max_rel_error:.3e} (tolerance {report.tolerance:.1e})")
    return EXIT_OK if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vdeeponet",
        description="Operator-network surrogates for brittle fracture and "
                    "Darcy flow")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True, checkpoint=False, points=False):
        if config:
            p.add_argument("--config", required=True, help="run config JSON")
        if checkpoint:
            p.add_argument("--checkpoint", required=True,
                           help="checkpoint JSON from train")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        if points:
            p.add_argument("--points", type=int, default=0,
                           help="evaluation point count (0 = all grid nodes)")

    add_common(sub.add_parser("generate", help="run the grid oracle and "
                                               "write a dataset"))
    add_common(sub.add_parser("train", help="train from a generated dataset"))
    add_common(sub.add_parser("predict", help="predict fields for one input"),
               checkpoint=True, points=True)
    add_common(sub.add_parser("rollout", help="sequential multi-step "
                                              "prediction"),
               checkpoint=True, points=True)
    check = sub.add_parser("check-grad", help="verify reverse-mode gradients "
                                              "against finite differences")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--inject-error", action="store_true",
                       help="negative control: corrupt one gradient")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_cap()
        if args.command == "check-grad":
            return cmd_check_grad(args.seed, args.inject_error)
        cfg = load_config(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        out_dir = args.out if args.out else cfg.output_dir
        if args.command == "generate":
            return cmd_generate(cfg, out_dir, seed)
        if args.command == "train":
            return cmd_train(cfg, out_dir, seed)
        if args.command == "predict":
            return cmd_predict(cfg, args.checkpoint, out_dir, seed,
                               args.points)
        if args.command == "rollout":
            return cmd_rollout(cfg, args.checkpoint, out_dir, seed,
                               args.points)
        raise ConfigurationError(f"unknown command {args.command}")
    except (ConfigurationError, ArgumentError, DatasetError) as exc:
        _log(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (NumericalError, StateError) as exc:
        _log(f"solver error: {exc}")
        return EXIT_SOLVER
    except (IOFailure, OSError) as exc:
        _log(f"i/o error: {exc}")
        return EXIT_IO
    except VdonError as exc:  # residual library errors map to config
        _log(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
