import json

import pytest

from metamorph.config import SEED_ENV, load_config
from metamorph.forecaster import TrainConfig


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_without_file():
    cfg = load_config(environ={})
    assert cfg.seed == 0 and cfg.n_runs == 30
    assert cfg.train == TrainConfig()


def test_yaml_sections(tmp_path):
    p = _write(tmp_path, "seed: 4\nn_runs: 12\ntrain:\n  epochs: 7\n  hidden_size: 5\n"
                         "data:\n  value_column: y\nmatrix:\n  epochs: 2\n  gate_seeds: [5]\n")
    cfg = load_config(p, environ={})
    assert cfg.seed == 4 and cfg.train.seed == 4
    assert cfg.train.epochs == 7 and cfg.train.hidden_size == 5
    assert cfg.data.value_column == "y"
    assert cfg.matrix.suite.train.epochs == 2 and cfg.matrix.gate_seeds == (5,)
    assert cfg.suite().n_runs == 12


def test_json_is_accepted(tmp_path):
    p = _write(tmp_path, json.dumps({"seed": 2, "train": {"epochs": 3}}), "cfg.json")
    assert load_config(p, environ={}).train.epochs == 3


def test_seed_precedence(tmp_path):
    p = _write(tmp_path, "seed: 1\n")
    assert load_config(p, environ={}).seed == 1
    assert load_config(p, environ={SEED_ENV: "7"}).seed == 7
    cfg = load_config(p, seed=9, environ={SEED_ENV: "7"})
    assert cfg.seed == 9 and cfg.train.seed == 9 and cfg.matrix.seed == 9


@pytest.mark.parametrize("text", ["bogus: 1\n", "train:\n  epoch: 3\n", "data:\n  col: x\n",
                                  "matrix:\n  warp: 2\n", "- 1\n- 2\n"])
def test_bad_files_rejected(tmp_path, text):
    with pytest.raises(ValueError):
        load_config(_write(tmp_path, text), environ={})


@pytest.mark.parametrize("env", ["abc", "-3"])
def test_bad_env_seed(env):
    with pytest.raises(ValueError):
        load_config(environ={SEED_ENV: env})


def test_to_dict_is_json_serializable():
    json.dumps(load_config(environ={}).to_dict())


def test_shipped_configs_load():
    for name in ("default", "quick"):
        load_config(f"configs/{name}.yaml", environ={})
