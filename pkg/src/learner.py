"""Train, evaluate and explain the queue-discipline classifier."""

import logging

import numpy as np

from .config import TrainConfig
from .errors import DegenerateDatasetError
from .mlp import (
    MlpModel,
    fit_normalizer,
    init_model,
    normalize,
    pack,
    penalised_loss_and_grad,
    predict_proba,
    unpack,
)
from .optim import OptimizeResult, adam_minimize, lbfgs_minimize, sgd_minimize
from .rng import child_rng
from .types import ConfusionMatrix, Dataset, ImportanceReport

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = {"SGD": 0.01, "ADAM": 0.001}
DEFAULT_BATCH_SIZE = 200
_MINIBATCH_STREAM = 1


def check_trainable(data: Dataset) -> None:
    if len(data) < 2:
        raise DegenerateDatasetError(f"need at least 2 examples, got {len(data)}")
    if np.unique(data.y).size < 2:
        raise DegenerateDatasetError("training data holds a single class")


def train(data: Dataset, cfg: TrainConfig | None = None) -> MlpModel:
    """Fit an MLP on data; deterministic for a given cfg.seed.

    Inputs are z-scored with statistics of `data` alone, and those statistics
    travel with the model so prediction applies the same transform.
    """
    cfg = (cfg or TrainConfig()).validate()
    check_trainable(data)

    mean, std = fit_normalizer(data.X)
    model = init_model(data.X.shape[1], cfg.hidden_layers, cfg.seed, mean, std)
    Z = normalize(model, data.X)
    y = data.y.astype(float)
    sizes = model.layer_sizes

    def batch_objective(theta: np.ndarray, idx: np.ndarray) -> tuple[float, np.ndarray]:
        weights, biases = unpack(theta, sizes)
        loss, grads = penalised_loss_and_grad(weights, biases, Z[idx], y[idx], cfg.l2_alpha)
        return loss, pack(grads.weights, grads.biases)

    def full_objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        weights, biases = unpack(theta, sizes)
        loss, grads = penalised_loss_and_grad(weights, biases, Z, y, cfg.l2_alpha)
        return loss, pack(grads.weights, grads.biases)

    theta0 = pack(model.weights, model.biases)
    result: OptimizeResult
    if cfg.solver == "LBFGS":
        result = lbfgs_minimize(full_objective, theta0, max_iter=cfg.max_iter, tol=cfg.tol)
    else:
        minimize = sgd_minimize if cfg.solver == "SGD" else adam_minimize
        result = minimize(
            batch_objective,
            theta0,
            n_samples=len(data),
            rng=child_rng(cfg.seed, _MINIBATCH_STREAM),
            learning_rate=cfg.learning_rate or DEFAULT_LEARNING_RATE[cfg.solver],
            batch_size=min(cfg.batch_size or DEFAULT_BATCH_SIZE, len(data)),
            max_iter=cfg.max_iter,
            tol=cfg.tol,
        )
    if not result.converged:
        logger.info(
            "%s stopped after %d iterations without converging (%s, loss=%.6g)",
            cfg.solver,
            result.n_iter,
            result.message,
            result.fun,
        )

    weights, biases = unpack(result.x, sizes)
    return MlpModel(
        layer_sizes=sizes,
        weights=[w.copy() for w in weights],
        biases=[b.copy() for b in biases],
        norm_mean=mean,
        norm_std=std,
        config=cfg,
    )


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionMatrix:
    """Counts with label 1 (Pie) as the positive class."""
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(y_true & y_pred)),
        fp=int(np.sum(~y_true & y_pred)),
        tn=int(np.sum(~y_true & ~y_pred)),
        fn=int(np.sum(y_true & ~y_pred)),
    )


def predict(m: MlpModel, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return (predict_proba(m, X) >= threshold).astype(int)


def evaluate(m: MlpModel, data: Dataset, threshold: float = 0.5) -> ConfusionMatrix:
    return confusion_matrix(data.y, predict(m, data.X, threshold))


def accuracy(m: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(predict(m, X) == y)) if len(y) else 0.0


def permutation_importance(
    m: MlpModel, data: Dataset, repeats: int = 10, seed: int = 0
) -> ImportanceReport:
    """Accuracy lost when one column is shuffled, averaged over `repeats` shuffles."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rng = child_rng(seed)
    baseline = accuracy(m, data.X, data.y)
    scores = []
    for j, name in enumerate(data.feature_names):
        drops = []
        X = data.X.copy()
        column = data.X[:, j]
        for _ in range(repeats):
            X[:, j] = rng.permutation(column)
            drops.append(baseline - accuracy(m, X, data.y))
        scores.append((name, float(np.mean(drops))))
    # sorted() is stable, so ties keep feature order
    return ImportanceReport(ranked=sorted(scores, key=lambda item: -item[1]))
