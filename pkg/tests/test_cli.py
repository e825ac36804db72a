import json
import os
import subprocess
import sys

import pytest

from emssl.cli import main

TINY = {
    "layer_dims": [3, 16, 6],
    "n_samples": 1500,
    "n_train": 1000,
    "emssl": {"max_iterations": 2, "epochs": 1, "eval_size": 200, "infer_batch": 128,
              "train_batch": 64, "workers": 2},
    "bench": {"n_goals": 300, "layer_dims": [3, 16, 6], "batch_sizes": [1, 64],
              "thread_counts": [1, 2, 4, 6, 12]},
    "adapt": {"max_iterations": 2},
}

ONE_LINK = {
    "chain": {"axes": ["Z"], "link_lengths_cm": [10.0], "joint_limits_deg": [[-90.0, 90.0]]},
    "layer_dims": [3, 64, 64, 1],
    "n_samples": 1500,
    "n_train": 1000,
    "method": "direct",
    "baseline_epochs": 500,
    "emssl": {"epochs": 10, "train_batch": 64, "infer_batch": 128, "lr": 0.001, "workers": 1},
}


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def trained_dir(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    out = tmp_path / "run"
    assert run(capsys, "gen-data", "--config", cfg, "--out", out, "--quiet")[0] == 0
    assert run(capsys, "train", "--config", cfg, "--out", out, "--quiet")[0] == 0
    return cfg, out


def test_gen_data_rows_and_snapshot(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    code, out, _ = run(capsys, "gen-data", "--config", cfg, "--out", tmp_path / "d", "--quiet")
    assert code == 0
    assert json.loads(out)["train_rows"] == 1000
    d = tmp_path / "d"
    assert len((d / "train.csv").read_text().splitlines()) == 1001
    assert len((d / "test.csv").read_text().splitlines()) == 501
    snap = json.loads((d / "config.json").read_text())
    assert snap["n_samples"] == 1500


def test_train_outputs(trained_dir, capsys):
    _, out = trained_dir
    for name in ("model.json", "curve.csv", "metrics.json", "config.json"):
        assert (out / name).exists()
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics) >= {"mean_err_cm", "max_err_cm", "iterations"}
    assert metrics["iterations"] == 2
    assert len((out / "curve.csv").read_text().splitlines()) == 3


def test_train_zero_iterations(tmp_path, capsys):
    doc = json.loads(json.dumps(TINY))
    doc["emssl"]["max_iterations"] = 0
    cfg = write_cfg(tmp_path, doc)
    assert run(capsys, "gen-data", "--config", cfg, "--out", tmp_path, "--quiet")[0] == 0
    code, out, _ = run(capsys, "train", "--config", cfg, "--out", tmp_path, "--quiet")
    assert code == 0 and json.loads(out)["iterations"] == 0
    assert len((tmp_path / "curve.csv").read_text().splitlines()) == 1


def test_eval_matches_training_metric(trained_dir, capsys):
    _, out = trained_dir
    code, stdout, _ = run(capsys, "eval", "--checkpoint", out / "model.json", "--out", out)
    assert code == 0
    ev = json.loads(stdout)
    metrics = json.loads((out / "metrics.json").read_text())
    assert abs(ev["mean_err_cm"] - metrics["mean_err_cm"]) <= 1e-9
    assert set(ev) >= {"mean_err_cm", "max_err_cm", "p50_err_cm", "p95_err_cm"}
    assert (out / "eval.json").exists()


def test_eval_untrained_checkpoint(tmp_path, capsys):
    from emssl.datagen import fit_normalizers, sample_joint_dataset, write_csv
    from emssl.kinematics import DEFAULT6
    from emssl.neuralnet import init_mlp, save_checkpoint

    save_checkpoint(tmp_path / "m.json", init_mlp([3, 32, 6], 0), fit_normalizers(DEFAULT6),
                    {"chain": DEFAULT6.to_dict()})
    write_csv(tmp_path / "test.csv", sample_joint_dataset(DEFAULT6, 300, 1))
    code, out, _ = run(capsys, "eval", "--checkpoint", tmp_path / "m.json")
    assert code == 0 and json.loads(out)["mean_err_cm"] > 10


def test_eval_joint_mismatch(trained_dir, tmp_path, capsys):
    _, out = trained_dir
    planar = write_cfg(tmp_path, {"chain": {"axes": ["Z", "Z"], "link_lengths_cm": [10, 10],
                                            "joint_limits_deg": [[-90, 90]] * 2},
                                  "layer_dims": [3, 8, 2]}, "planar.json")
    code, _, err = run(capsys, "eval", "--checkpoint", out / "model.json", "--config", planar)
    assert code == 1 and "joints" in err


def test_eval_corrupt_checkpoint(tmp_path, capsys):
    bad = tmp_path / "model.json"
    bad.write_text("{broken")
    code, _, err = run(capsys, "eval", "--checkpoint", bad)
    assert code == 1 and len(err.strip().splitlines()) == 1


def test_usage_errors(tmp_path, capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "train", "--config", "nope")[0] == 1
    assert run(capsys, "train", "--config", "desk", "--out", tmp_path / "empty")[0] == 1
    assert run(capsys, "train", "--method", "cgan")[0] == 1
    assert run(capsys, "--help")[0] == 0


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "gen-data", "--config", write_cfg(tmp_path, TINY),
                       "--out", blocker / "sub")
    assert code == 1 and "output directory" in err


def test_bench_modes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    out = tmp_path / "b"
    assert run(capsys, "bench", "--config", cfg, "--out", out, "--quiet")[0] == 0
    assert len((out / "strategies.csv").read_text().splitlines()) == 5
    assert run(capsys, "bench", "--config", cfg, "--out", out, "--mode", "thread-sweep",
               "--quiet")[0] == 0
    assert len((out / "thread_sweep.csv").read_text().splitlines()) == 6
    assert run(capsys, "bench", "--config", cfg, "--out", out, "--mode", "batch-sweep",
               "--quiet")[0] == 0
    assert len((out / "batch_sweep.csv").read_text().splitlines()) == 3
    assert run(capsys, "bench", "--config", cfg, "--out", out, "--mode", "warp")[0] == 1


@pytest.mark.parametrize("mode", ["refit", "real"])
def test_adapt_zero_delta(trained_dir, capsys, mode):
    cfg, out = trained_dir
    code, stdout, _ = run(capsys, "adapt", "--config", cfg, "--checkpoint", out / "model.json",
                          "--out", out, "--mode", mode, "--delta-cm", 0, "--quiet")
    assert code == 0
    rep = json.loads((out / f"adapt_{mode}_0cm.json").read_text())
    assert rep["iterations"] == 0 and json.loads(stdout)["iterations"] == 0


def test_adapt_refit_residuals(trained_dir, capsys):
    cfg, out = trained_dir
    code, _, err = run(capsys, "adapt", "--config", cfg, "--checkpoint", out / "model.json",
                       "--out", out, "--mode", "refit", "--delta-cm", 1)
    assert code == 0 and "Length change" in err
    rep = json.loads((out / "adapt_refit_1cm.json").read_text())
    assert max(abs(r) for r in rep["refit_residuals_cm"]) <= 0.01


def test_direct_one_link_metric(tmp_path, capsys):
    cfg = write_cfg(tmp_path, ONE_LINK)
    assert run(capsys, "gen-data", "--config", cfg, "--out", tmp_path, "--quiet")[0] == 0
    code, out, _ = run(capsys, "train", "--config", cfg, "--out", tmp_path, "--quiet")
    assert code == 0
    assert json.loads(out)["mean_err_cm"] < 0.01 * 10.0


def test_rerun_from_snapshot_is_identical(trained_dir, tmp_path, capsys):
    _, first = trained_dir
    snap = first / "config.json"
    second = tmp_path / "again"
    assert run(capsys, "gen-data", "--config", snap, "--out", second, "--quiet")[0] == 0
    assert run(capsys, "train", "--config", snap, "--out", second, "--quiet")[0] == 0
    for name in ("train.csv", "test.csv", "model.json", "metrics.json", "config.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    # wall-time columns are the only permitted difference
    curves = [[line.split(",")[:4] for line in (d / "curve.csv").read_text().splitlines()]
              for d in (first, second)]
    assert curves[0] == curves[1]


def test_module_entry_point_exit_codes(tmp_path):
    env = dict(os.environ)
    ok = subprocess.run([sys.executable, "-m", "emssl", "--help"], capture_output=True, env=env)
    bad = subprocess.run([sys.executable, "-m", "emssl", "eval"], capture_output=True, env=env,
                         cwd=tmp_path)
    assert ok.returncode == 0
    assert bad.returncode == 1 and bad.stderr.decode().strip().count("\n") <= 1
