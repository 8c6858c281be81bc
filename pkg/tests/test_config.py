import dataclasses
import json

import pytest

from src.config import (
    COMPLEX_PROFILE,
    SEED_ENV_VAR,
    ComplexityProfile,
    ExperimentConfig,
    SearchSpace,
    TrainConfig,
    config_from_dict,
    config_hash,
    data_hash,
    dump_config,
    load_config,
    load_train_config,
)
from src.errors import ConfigError


def test_defaults_are_valid():
    cfg = ExperimentConfig().validate()
    assert cfg.n_topologies == 1100
    assert cfg.duration_s == 20.0
    assert cfg.train.hidden_layers == (14,)
    assert cfg.train.solver == "LBFGS"
    assert cfg.train.l2_alpha == pytest.approx(5e-11)


def test_dump_then_load_gives_same_config():
    cfg = ExperimentConfig()
    assert config_from_dict(json.loads(dump_config(cfg))) == cfg


def test_partial_config_keeps_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_topologies": 50, "train": {"hidden_layers": [8, 4]}}))
    cfg = load_config(path)
    assert cfg.n_topologies == 50
    assert cfg.train.hidden_layers == (8, 4)
    assert cfg.profile == ComplexityProfile()


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"n_topologise": 5})
    with pytest.raises(ConfigError):
        config_from_dict({"profile": {"switch": [3, 5]}})


@pytest.mark.parametrize(
    "doc",
    [
        {"n_topologies": 0},
        {"duration_s": -1.0},
        {"held_out_fraction": 1.0},
        {"parallelism": 0},
        {"profile": {"switches": [5, 3]}},
        {"profile": {"edge_prob": [0.0, 1.5]}},
        {"train": {"hidden_layers": [21]}},
        {"train": {"hidden_layers": [4, 4, 4, 4, 4]}},
        {"train": {"solver": "RMSPROP"}},
        {"search": {"space": {"layers": [0, 2]}}},
        {"search": {"test_fraction": 0.0}},
        {"cv_folds": 1},
    ],
)
def test_invalid_values_rejected(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_train_config_file(tmp_path):
    path = tmp_path / "train.json"
    path.write_text(json.dumps({"solver": "ADAM", "learning_rate": 0.01}))
    assert load_train_config(path) == TrainConfig(solver="ADAM", learning_rate=0.01)


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "42")
    assert load_config().base_seed == 42
    monkeypatch.setenv(SEED_ENV_VAR, "forty-two")
    with pytest.raises(ConfigError):
        load_config()


def test_config_hash_tracks_content():
    cfg = ExperimentConfig()
    assert config_hash(cfg) == config_hash(ExperimentConfig())
    assert config_hash(cfg) != config_hash(dataclasses.replace(cfg, base_seed=1))


def test_data_hash_ignores_classifier_settings():
    cfg = ExperimentConfig()
    same_data = dataclasses.replace(
        cfg,
        train=TrainConfig(hidden_layers=(8,)),
        importance_repeats=3,
        n_topologies=7,
        parallelism=4,
        output_dir="elsewhere",
    )
    assert data_hash(same_data) == data_hash(cfg)
    assert data_hash(dataclasses.replace(cfg, duration_s=10.0)) != data_hash(cfg)
    assert data_hash(dataclasses.replace(cfg, base_seed=1)) != data_hash(cfg)
    assert data_hash(dataclasses.replace(cfg, profile=COMPLEX_PROFILE)) != data_hash(cfg)


def test_complex_profile_dominates_default():
    assert COMPLEX_PROFILE.dominates(ComplexityProfile())
    assert not ComplexityProfile().dominates(ComplexityProfile())
    assert not ComplexityProfile().dominates(COMPLEX_PROFILE)


def test_search_space_validation():
    SearchSpace().validate()
    with pytest.raises(ConfigError):
        SearchSpace(neurons=(1, 20)).validate()
    with pytest.raises(ConfigError):
        SearchSpace(solvers=()).validate()
