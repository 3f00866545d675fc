import json
import os

import numpy as np
import pytest

from vdeeponet import io as vio
from vdeeponet.cli import main
from vdeeponet.surrogate import sensors_near_crack_band


def _write_config(tmp_path, **overrides):
    sensors = sensors_near_crack_band(8, seed=0)
    sensor_path = tmp_path / "sensors.csv"
    vio.write_sensors_csv(str(sensor_path), sensors)
    cfg = {
        "format_version": 1,
        "scenario": "tensile",
        "layout": "s2",
        "seed": 0,
        "output_dir": "out",
        "data_dir": "out",
        "sensor_file": "sensors.csv",
        "material": {"nu_lame": 121.15, "mu_lame": 80.77, "g_c": 2.7e-3,
                     "l_0": 0.0625},
        "b_scalar": 1000.0,
        "geometry": {"cracks": [[[0.0, 0.5], [0.5, 0.5]]]},
        "schedule": [1.4e-3],
        "grid": {"nx": 12, "ny": 12},
        "oracle": {"tol": 1e-5, "max_iter": 4000},
        "network": {"branch_hidden": [8], "trunk_hidden": [8], "q": 2},
        "training": {"epochs": 25, "learning_rate": 1e-3},
        "points": 40,
    }
    cfg.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_generate_is_reproducible(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["generate", "--config", cfg]) == 0
    hash_a = vio.read_json(str(tmp_path / "out/manifest.json"))["content_hash"]
    assert main(["generate", "--config", cfg,
                 "--out", str(tmp_path / "again")]) == 0
    hash_b = vio.read_json(str(tmp_path / "again/manifest.json"))["content_hash"]
    assert hash_a == hash_b


def test_generate_missing_sensor_file_exits_4(tmp_path, capsys):
    cfg = _write_config(tmp_path, sensor_file="nope.csv")
    assert main(["generate", "--config", cfg]) == 4
    assert "nope.csv" in capsys.readouterr().err


def test_unknown_config_key_exits_2(tmp_path):
    cfg = _write_config(tmp_path, bogus_key=1)
    assert main(["generate", "--config", cfg]) == 2


def test_darcy_with_data_weight_exits_2(tmp_path):
    cfg_path = tmp_path / "darcy.json"
    cfg_path.write_text(json.dumps({
        "scenario": "darcy", "output_dir": "out", "seed": 1,
        "grid": {"nx": 8, "ny": 8},
        "network": {"branch_hidden": [8], "trunk_hidden": [8], "q": 4},
        "training": {"epochs": 5, "lambda_data": 1.0},
        "darcy": {"n_samples": 2},
    }))
    assert main(["train", "--config", str(cfg_path)]) == 2


def test_full_pipeline_train_predict_rollout(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["generate", "--config", cfg]) == 0

    assert main(["train", "--config", cfg]) == 0
    trace = vio.read_csv(str(tmp_path / "out/loss_trace.csv"),
                         "epoch,total,data,var")
    assert trace.shape == (25, 4)

    # reload harness: checkpoint reproduces the trained parameters bit-exactly
    from vdeeponet.surrogate import load_checkpoint
    params, meta = load_checkpoint(str(tmp_path / "out/checkpoint.json"))
    params2, _ = load_checkpoint(str(tmp_path / "out/checkpoint.json"))
    for a, b in zip(params.trunk.weights, params2.trunk.weights):
        assert np.array_equal(a, b)

    ck = str(tmp_path / "out/checkpoint.json")
    assert main(["predict", "--config", cfg, "--checkpoint", ck,
                 "--points", "30"]) == 0
    data = vio.read_csv(str(tmp_path / "out/prediction.csv"), "x,y,u,v,phi")
    assert data.shape == (30, 5)

    # deterministic across reruns
    first = (tmp_path / "out/prediction.csv").read_bytes()
    assert main(["predict", "--config", cfg, "--checkpoint", ck,
                 "--points", "30"]) == 0
    assert (tmp_path / "out/prediction.csv").read_bytes() == first

    # boundary rows of a full-grid prediction satisfy the lift exactly
    assert main(["predict", "--config", cfg, "--checkpoint", ck]) == 0
    pts, u, v, phi = vio.read_fields_csv(str(tmp_path / "out/prediction.csv"))
    top = np.isclose(pts[:, 1], 1.0)
    assert np.max(np.abs(v[top] - 1.4e-3)) < 1e-14
    left = np.isclose(pts[:, 0], 0.0)
    assert np.max(np.abs(u[left])) < 1e-14


def test_rollout_command_contract(tmp_path, capsys):
    cfg = _write_config(tmp_path, layout="unified",
                        schedule=[1.0e-3, 1.4e-3],
                        training={"epochs": 10, "learning_rate": 1e-3})
    assert main(["generate", "--config", cfg]) == 0
    assert main(["train", "--config", cfg]) == 0
    ck = str(tmp_path / "out/checkpoint.json")

    assert main(["rollout", "--config", cfg, "--checkpoint", ck,
                 "--points", "25"]) == 0
    err = capsys.readouterr().err
    assert "padded" in err and "zeros" in err

    steps = sorted(f for f in os.listdir(tmp_path / "out")
                   if f.startswith("rollout_step"))
    assert len(steps) == 2
    energies = sorted(f for f in os.listdir(tmp_path / "out")
                      if f.startswith("rollout_energy"))
    assert len(energies) == 2

    # emitted per-sensor history is monotone across steps
    _, e1 = vio.read_energy_csv(str(tmp_path / "out" / energies[0]))
    _, e2 = vio.read_energy_csv(str(tmp_path / "out" / energies[1]))
    assert np.all(e2 >= e1 - 1e-15)

    # byte-identical rerun
    blobs = {f: (tmp_path / "out" / f).read_bytes()
             for f in steps + energies}
    assert main(["rollout", "--config", cfg, "--checkpoint", ck,
                 "--points", "25"]) == 0
    for f, blob in blobs.items():
        assert (tmp_path / "out" / f).read_bytes() == blob

    # an s2 checkpoint is rejected for rollout
    cfg_s2 = _write_config(tmp_path, layout="s2", schedule=[1.4e-3],
                           output_dir="out_s2", data_dir="out_s2")
    assert main(["generate", "--config", cfg_s2]) == 0
    assert main(["train", "--config", cfg_s2]) == 0
    assert main(["rollout", "--config", cfg_s2,
                 "--checkpoint", str(tmp_path / "out_s2/checkpoint.json")]) == 3


def test_checkpoint_reload_reproduces_final_loss(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["generate", "--config", cfg]) == 0
    assert main(["train", "--config", cfg]) == 0

    from vdeeponet.config import load_config
    from vdeeponet.deeponet import LiftSpec
    from vdeeponet.network import param_bindings
    from vdeeponet.surrogate import (build_training_graph, load_checkpoint,
                                     load_generated_dataset)
    from vdeeponet import autodiff as ad

    run = load_config(cfg)
    params, meta = load_checkpoint(str(tmp_path / "out/checkpoint.json"))
    ds = load_generated_dataset(run.data_dir, run.layout, run.material,
                                b_scalar=run.b_scalar,
                                points_cap=run.points_cap, seed=run.seed,
                                energy_scale=meta["energy_scale"])
    root, _, _, _ = build_training_graph(
        ds, LiftSpec(run.scenario, run.schedule.deltas[-1]), run.material,
        run.training, run.network)
    binds = {**param_bindings(params.branch, "branch"),
             **param_bindings(params.trunk, "trunk")}
    loss_a = float(np.asarray(ad.evaluate(root, binds)).reshape(()))
    loss_b = float(np.asarray(ad.evaluate(root, binds)).reshape(()))
    assert loss_a == loss_b
    assert np.isfinite(loss_a)


def test_check_grad_command(capsys):
    assert main(["check-grad", "--seed", "5"]) == 0
    err = capsys.readouterr().err
    assert "max relative error" in err
    assert main(["check-grad", "--seed", "5", "--inject-error"]) != 0


def test_missing_checkpoint_is_solver_error(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["predict", "--config", cfg, "--checkpoint",
                 str(tmp_path / "missing.json")]) == 3
