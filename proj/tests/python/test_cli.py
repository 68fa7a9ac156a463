import csv
import filecmp
import json

import numpy as np
import pytest
from PIL import Image

import rmvl
from conftest import run_cli


def test_usage_errors_exit_1(tiny_config):
    assert run_cli().returncode == 1
    assert run_cli("train").returncode == 1
    assert run_cli("train", "bogus", "--config", tiny_config).returncode == 1


def test_gr_without_gm_exits_2(tmp_path, tiny_config):
    r = run_cli("train", "gr", "--config", tiny_config, "--out", tmp_path)
    assert r.returncode == 2
    assert "gm" in r.stderr


def test_missing_manifest_exits_2(tmp_path, tiny_config):
    r = run_cli("train", "gm", "--config", tiny_config, "--manifest", tmp_path / "nope.json", "--out", tmp_path)
    assert r.returncode == 2


def test_datagen_is_reproducible(tmp_path, tiny_config):
    for name in ("a", "b"):
        assert run_cli("datagen", "--config", tiny_config, "--out", tmp_path / name).returncode == 0
    assert filecmp.cmp(tmp_path / "a" / "manifest.json", tmp_path / "b" / "manifest.json", shallow=False)
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert len(manifest["clips"]) == 12
    assert run_cli("datagen", "--config", tiny_config, "--seed", "9", "--out", tmp_path / "c").returncode == 0
    assert not filecmp.cmp(tmp_path / "a" / "manifest.json", tmp_path / "c" / "manifest.json", shallow=False)


def read_steps(path):
    with open(path) as f:
        return [int(row["step"]) for row in csv.DictReader(f)]


def test_loss_csv_has_one_row_per_step(trained_run):
    for stage in ("lstm", "gm", "gr"):
        assert read_steps(trained_run / stage / "loss.csv") == [1, 2, 3]


def test_checkpoints_carry_stage_tags(trained_run):
    assert rmvl.checkpoint_header(trained_run / "gm" / "gm.ckpt")["stage"] == "gm"
    assert rmvl.checkpoint_header(trained_run / "gr" / "gr.ckpt")["stage"] == "gr"


def test_resume_continues_step_numbering(tmp_path, trained_run, tiny_config):
    cfg = tmp_path / "more.txt"
    cfg.write_text(tiny_config.read_text().replace("steps = 3", "steps = 5"))
    run = tmp_path / "run"
    (run / "gm").mkdir(parents=True)
    for name in ("gm.ckpt", "critic_image.ckpt", "loss.csv"):
        (run / "gm" / name).write_bytes((trained_run / "gm" / name).read_bytes())
    r = run_cli("train", "gm", "--resume", "--config", cfg, "--manifest", trained_run / "data" / "manifest.json",
                "--out", run)
    assert r.returncode == 0, r.stderr
    assert read_steps(run / "gm" / "loss.csv") == [1, 2, 3, 4, 5]


def test_generate_writes_frames_masks_and_gif(tmp_path, trained_run, tiny_config):
    out = tmp_path / "gen"
    r = run_cli("generate", "--config", tiny_config, "--manifest", trained_run / "data" / "manifest.json",
                "--clip", "clip_0000", "--gm", trained_run / "gm" / "gm.ckpt", "--gr", trained_run / "gr" / "gr.ckpt",
                "--lstm", trained_run / "lstm" / "lstm.ckpt", "--out", out)
    assert r.returncode == 0, r.stderr
    assert len(list((out / "coarse").glob("*.png"))) == 12
    assert len(list((out / "refined").glob("*.png"))) == 12
    masks = list((out / "masks").glob("*.png"))
    assert len(masks) == 24
    m = np.asarray(Image.open(masks[0]))
    assert m.min() >= 0 and m.max() <= 255
    with Image.open(out / "side_by_side.gif") as gif:
        assert gif.format == "GIF"
        assert gif.n_frames == 12


def test_evaluate_writes_reports(tmp_path, trained_run, tiny_config):
    out = tmp_path / "eval"
    r = run_cli("evaluate", "--config", tiny_config, "--manifest", trained_run / "data" / "manifest.json",
                "--gm", trained_run / "gm" / "gm.ckpt", "--gr", trained_run / "gr" / "gr.ckpt", "--use-gt-maps",
                "--out", out)
    assert r.returncode == 0, r.stderr
    with open(out / "eval.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    summary = json.loads((out / "eval.json").read_text())
    assert summary["mse"] == pytest.approx(np.mean([float(row["mse"]) for row in rows]))
    assert (out / "psnr.png").exists()


def test_generate_with_missing_checkpoint_exits_2(tmp_path, trained_run, tiny_config):
    r = run_cli("generate", "--config", tiny_config, "--manifest", trained_run / "data" / "manifest.json",
                "--clip", "clip_0000", "--gm", tmp_path / "missing.ckpt", "--out", tmp_path / "gen")
    assert r.returncode == 2
