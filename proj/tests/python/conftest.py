import os
import shutil
import subprocess
from pathlib import Path

import pytest

TINY_CONFIG = """\
clips = 12
clip_length = 42
height = 16
width = 16
batch = 2
k_max = 8
clip_k = 4
observed = 10
predict = 12
gm_stages = 2
gm_base_width = 2
gm_max_width = 4
gr_base_width = 2
lstm_hidden = 8
steps = 3
log_every = 1
seed = 3
"""


def cli_path():
    path = os.environ.get("RMVL_CLI") or shutil.which("rmvl")
    if not path:
        pytest.skip("rmvl CLI not found; set RMVL_CLI")
    return path


def run_cli(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("RMVL_HOME", None)
    if env:
        full_env.update(env)
    return subprocess.run([cli_path(), *map(str, args)], capture_output=True, text=True, env=full_env)


@pytest.fixture(scope="session")
def tiny_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "tiny.txt"
    path.write_text(TINY_CONFIG)
    return path


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory, tiny_config):
    """A run directory with data and every stage trained for a few steps."""
    root = tmp_path_factory.mktemp("run")
    steps = [
        ("datagen", "--config", tiny_config, "--out", root / "data"),
        ("train", "lstm", "--config", tiny_config, "--manifest", root / "data" / "manifest.json", "--out", root),
        ("train", "gm", "--config", tiny_config, "--manifest", root / "data" / "manifest.json", "--out", root),
        ("train", "gr", "--config", tiny_config, "--manifest", root / "data" / "manifest.json", "--out", root),
    ]
    for args in steps:
        r = run_cli(*args)
        assert r.returncode == 0, r.stderr
    return Path(root)
