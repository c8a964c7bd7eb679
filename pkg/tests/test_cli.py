import csv
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from yamabe_concentration.cli import fmt, main
from yamabe_concentration.config import ConfigError, RunConfig, bundled_geometries, config_from_dict


def read_tree(path: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def cli(*args, env=None, cwd=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "yamabe_concentration.cli", *args],
                          capture_output=True, text=True, env=full_env, cwd=cwd)


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(-0.0) == "0"
    assert fmt(float("nan")) == "null"
    assert fmt(3) == "3"


def test_config_validation():
    with pytest.raises(ConfigError, match="^M:"):
        config_from_dict({"command": "constants", "M": 4})
    with pytest.raises(ConfigError, match="^bogus:"):
        config_from_dict({"command": "constants", "bogus": 1})
    with pytest.raises(ConfigError, match="^geometry:"):
        config_from_dict({"command": "construct"})
    with pytest.raises(ConfigError, match="^eps:"):
        config_from_dict({"command": "scaling", "geometry": "circle_constant", "eps": [1e-2, 5e-3]})
    assert RunConfig("constants").validate().eps == [1e-2, 5e-3, 2e-3, 1e-3]
    assert bundled_geometries() == ["circle_constant", "circle_cosine", "torus_constant"]


def test_constants_command(tmp_path):
    assert main(["constants", "--N", "9", "-o", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "constants.csv").open()))
    assert len(rows) == 1 and rows[0]["N"] == "9"
    assert rows[0]["pass_a"] == "true" and rows[0]["pass_c2"] == "true"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "ok" and summary["checks"]["T1_orthogonality"]


def test_repulsive_infeasible_exit(tmp_path):
    status = main(["repulsive-solve", "--geometry", "circle_constant", "--alpha", "1", "--beta", "1",
                   "-o", str(tmp_path)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert status == 1 and summary["reason"] == "min alpha >= 0"


def test_attractive_command(tmp_path):
    assert main(["attractive-solve", "--geometry", "circle_cosine", "--alpha", "2", "--beta", "1",
                 "-o", str(tmp_path)]) == 0
    assert (tmp_path / "solution.csv").exists()


def test_jacobi_command(tmp_path):
    main(["jacobi", "--geometry", "circle_constant", "--jacobi-potential", "flat", "-o", str(tmp_path)])
    assert json.loads((tmp_path / "summary.json").read_text())["jacobi_nondegeneracy"]["degenerate"] is True


def test_config_errors_exit_2(tmp_path):
    r = cli("construct", "-o", str(tmp_path))
    assert r.returncode == 2 and "geometry" in r.stderr
    r = cli("constants", "--M", "3", "-o", str(tmp_path))
    assert r.returncode == 2 and "M:" in r.stderr
    r = cli("construct", "--geometry", "no_such_surface", "-o", str(tmp_path))
    assert r.returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli("constants", "--config", str(bad)).returncode == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "constants", "M": 64, "output": str(tmp_path / "a")}))
    assert main(["constants", "--config", str(cfg), "--M", "4096"]) == 0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["config"]["M"] == 4096


@pytest.mark.parametrize("args", [
    ["construct", "--geometry", "circle_cosine", "--M", "256", "--eps", "1e-2", "5e-3", "2e-3", "1e-3"],
    ["repulsive-solve", "--geometry", "circle_cosine", "--alpha", "-1.5", "--beta", "1"],
    ["eigenpair"],
])
def test_byte_determinism(tmp_path, args):
    out = tmp_path / "out"
    trees = []
    for env in ({"YAMABE_THREADS": "1"}, {"YAMABE_THREADS": "1"}, {"YAMABE_THREADS": "4"}):
        r = cli(*args, "-o", "out", env=env, cwd=tmp_path)
        assert r.returncode == 0, r.stderr
        trees.append(read_tree(out))
        shutil.rmtree(out)
    assert trees[0] == trees[1] == trees[2]
