import numpy as np
import pytest
from conftest import make_dataset

from src.config import SearchSpace, TrainConfig
from src.errors import ConfigError, StratificationError
from src.model_selection import (
    baseline_candidates,
    compare_classifiers,
    cross_validate,
    random_search,
    sample_config,
    stratified_kfold,
    stratified_shuffle_split,
)
from src.rng import child_rng


def test_kfold_balanced_classes():
    y = np.array([0] * 50 + [1] * 50)
    for train_idx, test_idx in stratified_kfold(y, k=10, seed=0):
        assert np.sum(y[test_idx] == 0) == 5
        assert np.sum(y[test_idx] == 1) == 5
        assert len(train_idx) == 90


def test_kfold_test_folds_partition_examples():
    y = np.array([0] * 23 + [1] * 31)
    splits = stratified_kfold(y, k=7, seed=3)
    tests = np.concatenate([test for _, test in splits])
    assert sorted(tests.tolist()) == list(range(len(y)))
    for train_idx, test_idx in splits:
        assert not set(train_idx) & set(test_idx)
        assert len(train_idx) + len(test_idx) == len(y)


def test_kfold_uneven_classes_stay_balanced():
    y = np.array([0] * 23 + [1] * 31)
    splits = stratified_kfold(y, k=7, seed=3)
    sizes = [len(test) for _, test in splits]
    assert max(sizes) - min(sizes) <= 1
    for cls in (0, 1):
        per_fold = [int(np.sum(y[test] == cls)) for _, test in splits]
        assert max(per_fold) - min(per_fold) <= 1


def test_kfold_is_deterministic():
    y = np.tile([0, 1], 30)
    a = stratified_kfold(y, k=5, seed=8)
    b = stratified_kfold(y, k=5, seed=8)
    for (tr_a, te_a), (tr_b, te_b) in zip(a, b):
        np.testing.assert_array_equal(tr_a, tr_b)
        np.testing.assert_array_equal(te_a, te_b)
    c = stratified_kfold(y, k=5, seed=9)
    assert any(not np.array_equal(x[1], z[1]) for x, z in zip(a, c))


def test_kfold_small_class():
    y = np.array([0] * 20 + [1] * 4)
    with pytest.raises(StratificationError):
        stratified_kfold(y, k=5)


def test_kfold_needs_two_folds():
    with pytest.raises(ConfigError):
        stratified_kfold(np.tile([0, 1], 10), k=1)


def test_kfold_accepts_dataset(separable_dataset):
    splits = stratified_kfold(separable_dataset, k=4)
    assert len(splits) == 4


def test_shuffle_split_sizes():
    y = np.array([0] * 50 + [1] * 30)
    splits = stratified_shuffle_split(y, test_fraction=0.1, n_splits=20, seed=1)
    assert len(splits) == 20
    for train_idx, test_idx in splits:
        assert np.sum(y[test_idx] == 0) == 5
        assert np.sum(y[test_idx] == 1) == 3
        assert sorted(np.concatenate([train_idx, test_idx]).tolist()) == list(range(80))


def test_shuffle_split_keeps_one_training_example_per_class():
    y = np.array([0, 0, 1, 1])
    for train_idx, test_idx in stratified_shuffle_split(y, test_fraction=0.9, n_splits=5):
        assert sorted(y[train_idx].tolist()) == [0, 1]
        assert sorted(y[test_idx].tolist()) == [0, 1]


def test_shuffle_split_rejects_bad_input():
    with pytest.raises(ConfigError):
        stratified_shuffle_split(np.tile([0, 1], 5), test_fraction=1.0)
    with pytest.raises(StratificationError):
        stratified_shuffle_split(np.array([0, 0, 0, 1]), test_fraction=0.5)


def test_sampled_configs_stay_in_space():
    space = SearchSpace()
    rng = child_rng(0)
    solvers = set()
    for _ in range(1000):
        cfg = sample_config(space, rng)
        assert 1 <= len(cfg.hidden_layers) <= 4
        assert all(2 <= h <= 20 for h in cfg.hidden_layers)
        assert 1e-12 <= cfg.l2_alpha <= 1e-1
        solvers.add(cfg.solver)
    assert solvers == {"SGD", "ADAM", "LBFGS"}


def test_sampled_config_keeps_base_settings():
    base = TrainConfig(max_iter=7, seed=5)
    cfg = sample_config(SearchSpace(), child_rng(1), base)
    assert cfg.max_iter == 7
    assert cfg.seed == 5


SMALL_SPACE = SearchSpace(layers=(1, 1), neurons=(2, 4), solvers=("LBFGS",))
SMALL_BASE = TrainConfig(max_iter=50)


def test_random_search_needs_an_evaluation(separable_dataset):
    with pytest.raises(ConfigError):
        random_search(separable_dataset, n_evals=0)


def test_random_search_returns_best_trial(separable_dataset):
    cfg, score, trials = random_search(
        separable_dataset, SMALL_SPACE, n_evals=3, seed=2, repeats=3, base=SMALL_BASE
    )
    assert [t.index for t in trials] == [0, 1, 2]
    assert score == max(t.score for t in trials)
    first_best = next(t for t in trials if t.score == score)
    assert cfg == first_best.config
    assert all(len(t.split_scores) == 3 for t in trials)


def test_random_search_is_deterministic(separable_dataset):
    kwargs = dict(space=SMALL_SPACE, n_evals=2, seed=4, repeats=2, base=SMALL_BASE)
    a = random_search(separable_dataset, **kwargs)
    b = random_search(separable_dataset, **kwargs)
    assert a[0] == b[0]
    assert [t.split_scores for t in a[2]] == [t.split_scores for t in b[2]]


def test_random_search_in_worker_pool_matches_serial():
    data = make_dataset(n_pairs=20)
    kwargs = dict(space=SMALL_SPACE, n_evals=2, seed=6, repeats=2, base=SMALL_BASE)
    serial = random_search(data, **kwargs)
    pooled = random_search(data, parallelism=2, **kwargs)
    assert serial[0] == pooled[0]
    assert [t.score for t in serial[2]] == [t.score for t in pooled[2]]


def test_logistic_baseline_shares_folds_with_mlp():
    data = make_dataset(n_pairs=20)
    cfg = TrainConfig(hidden_layers=(4,), max_iter=40)
    candidates = baseline_candidates(cfg)
    assert candidates["mlp"] == cfg
    assert candidates["logistic"].hidden_layers == ()
    assert candidates["logistic"].solver == cfg.solver
    scores = compare_classifiers(data, candidates, k=4, seed=3)
    assert list(scores) == ["mlp", "logistic"]
    logistic = cross_validate(data, candidates["logistic"], 4, 3)
    np.testing.assert_array_equal(scores["logistic"], logistic)
    assert all(len(s) == 4 for s in scores.values())
