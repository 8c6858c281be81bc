"""Stratified splitting, cross-validation and randomized hyperparameter search."""

import dataclasses
import functools
import logging
import multiprocessing

import numpy as np
from tqdm import tqdm

from .config import SearchSpace, TrainConfig
from .errors import ConfigError, StratificationError
from .learner import accuracy, train
from .rng import STREAM_SPLIT, child_rng
from .types import Dataset, SearchTrial

logger = logging.getLogger(__name__)

Split = tuple[np.ndarray, np.ndarray]

_CONFIG_STREAM = 0


def _labels(data: Dataset | np.ndarray) -> np.ndarray:
    return np.asarray(data.y if isinstance(data, Dataset) else data)


def stratified_kfold(data: Dataset | np.ndarray, k: int = 10, seed: int = 0) -> list[Split]:
    """k (train, test) index pairs whose test folds partition the examples.

    Each class is shuffled and dealt round-robin over the folds; the dealing
    position carries over from one class to the next so fold sizes differ
    by at most one.
    """
    y = _labels(data)
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    rng = child_rng(seed, STREAM_SPLIT)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < k:
            raise StratificationError(f"class {cls} has {members.size} members, fewer than k={k}")
        for i, idx in enumerate(rng.permutation(members)):
            folds[(offset + i) % k].append(int(idx))
        offset = (offset + members.size) % k

    everything = np.arange(len(y))
    splits = []
    for fold in folds:
        test = np.sort(np.array(fold, dtype=int))
        splits.append((np.setdiff1d(everything, test), test))
    return splits


def stratified_shuffle_split(
    data: Dataset | np.ndarray, test_fraction: float = 0.1, n_splits: int = 1, seed: int = 0
) -> list[Split]:
    """Independent class-preserving train/test shuffles."""
    y = _labels(data)
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = child_rng(seed, STREAM_SPLIT)
    classes = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < 2:
            raise StratificationError(f"class {cls} has {members.size} member(s), need 2")
        n_test = min(max(1, round(test_fraction * members.size)), members.size - 1)
        classes.append((members, n_test))

    splits = []
    for _ in range(n_splits):
        train_idx, test_idx = [], []
        for members, n_test in classes:
            shuffled = rng.permutation(members)
            test_idx.append(shuffled[:n_test])
            train_idx.append(shuffled[n_test:])
        splits.append((np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))))
    return splits


def score_splits(data: Dataset, cfg: TrainConfig, splits: list[Split]) -> list[float]:
    scores = []
    for train_idx, test_idx in splits:
        model = train(data.subset(train_idx), cfg)
        held = data.subset(test_idx)
        scores.append(accuracy(model, held.X, held.y))
    return scores


def cross_validate(
    data: Dataset, cfg: TrainConfig | None = None, k: int = 10, seed: int = 0
) -> np.ndarray:
    """Held-out accuracy of each of the k stratified folds."""
    return np.array(score_splits(data, cfg or TrainConfig(), stratified_kfold(data, k, seed)))


def baseline_candidates(cfg: TrainConfig) -> dict[str, TrainConfig]:
    """The configured MLP and its zero-hidden-layer logistic-regression case."""
    return {"mlp": cfg, "logistic": dataclasses.replace(cfg, hidden_layers=())}


def compare_classifiers(
    data: Dataset, candidates: dict[str, TrainConfig], k: int = 10, seed: int = 0
) -> dict[str, np.ndarray]:
    """Fold accuracies of each candidate; every candidate sees the same folds."""
    scores = {}
    for name, cfg in candidates.items():
        scores[name] = cross_validate(data, cfg, k, seed)
        logger.info("%s: %d-fold mean accuracy %.4f", name, k, scores[name].mean())
    return scores


def sample_config(
    space: SearchSpace, rng: np.random.Generator, base: TrainConfig | None = None
) -> TrainConfig:
    """Draw one configuration; l2_alpha is log-uniform."""
    n_layers = int(rng.integers(space.layers[0], space.layers[1] + 1))
    hidden = tuple(
        int(rng.integers(space.neurons[0], space.neurons[1] + 1)) for _ in range(n_layers)
    )
    lo, hi = np.log10(space.l2_alpha[0]), np.log10(space.l2_alpha[1])
    l2_alpha = float(10.0 ** rng.uniform(lo, hi))
    solver = space.solvers[int(rng.integers(len(space.solvers)))]
    return dataclasses.replace(
        base or TrainConfig(), hidden_layers=hidden, l2_alpha=l2_alpha, solver=solver
    ).validate()


def _run_trial(
    item: tuple[int, TrainConfig], data: Dataset, splits: list[Split]
) -> SearchTrial:
    index, cfg = item
    scores = score_splits(data, cfg, splits)
    return SearchTrial(index=index, config=cfg, score=float(np.mean(scores)), split_scores=scores)


def random_search(
    data: Dataset,
    space: SearchSpace | None = None,
    n_evals: int = 20,
    seed: int = 0,
    repeats: int = 100,
    test_fraction: float = 0.1,
    parallelism: int = 1,
    base: TrainConfig | None = None,
) -> tuple[TrainConfig, float, list[SearchTrial]]:
    """Score n_evals sampled configs on shared shuffle splits; return the best.

    Ties go to the earliest trial. The log is ordered by trial index.
    """
    if n_evals < 1:
        raise ConfigError(f"n_evals must be >= 1, got {n_evals}")
    space = (space or SearchSpace()).validate()
    rng = child_rng(seed, _CONFIG_STREAM)
    configs = [sample_config(space, rng, base) for _ in range(n_evals)]
    splits = stratified_shuffle_split(data, test_fraction, repeats, seed)

    run = functools.partial(_run_trial, data=data, splits=splits)
    items = list(enumerate(configs))
    if parallelism > 1:
        with multiprocessing.Pool(parallelism) as pool:
            trials = list(tqdm(pool.imap(run, items), total=n_evals, desc="Search"))
    else:
        trials = [run(item) for item in tqdm(items, desc="Search")]

    best = max(trials, key=lambda t: (t.score, -t.index))
    logger.info("best trial %d: score %.4f with %s", best.index, best.score, best.config)
    return best.config, best.score, trials
