"""Multilayer perceptron: tanh hidden layers, sigmoid output, L2-penalised cross-entropy.

With no hidden layers the model is plain logistic regression.
"""

import hashlib
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from .config import TrainConfig, config_to_dict, train_config_from_dict
from .errors import ShapeError
from .rng import child_rng

MODEL_FORMAT_VERSION = 1


@dataclass
class MlpModel:
    layer_sizes: list[int]  # input, hidden..., 1
    weights: list[np.ndarray]  # (fan_in, fan_out) per layer
    biases: list[np.ndarray]
    norm_mean: np.ndarray
    norm_std: np.ndarray
    config: TrainConfig | None = None

    def __post_init__(self) -> None:
        if self.layer_sizes[-1] != 1:
            raise ShapeError("output layer must have exactly one unit")
        expected = list(zip(self.layer_sizes, self.layer_sizes[1:]))
        got = [w.shape for w in self.weights]
        if got != expected or [b.shape for b in self.biases] != [(n,) for _, n in expected]:
            raise ShapeError(f"weight shapes {got} do not chain as {expected}")
        if self.norm_mean.shape != (self.n_inputs,) or self.norm_std.shape != (self.n_inputs,):
            raise ShapeError("normalization statistics must match the input size")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def fit_normalizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and standard deviations; zero-variance columns get std 1."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


def init_model(
    n_inputs: int,
    hidden_layers: tuple[int, ...] | list[int],
    seed: int,
    norm_mean: np.ndarray | None = None,
    norm_std: np.ndarray | None = None,
) -> MlpModel:
    """Glorot-style symmetric uniform initialisation."""
    rng = child_rng(seed)
    sizes = [n_inputs, *hidden_layers, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        norm_mean=np.zeros(n_inputs) if norm_mean is None else norm_mean,
        norm_std=np.ones(n_inputs) if norm_std is None else norm_std,
    )


def normalize(m: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.n_inputs:
        raise ShapeError(f"expected inputs of width {m.n_inputs}, got shape {X.shape}")
    return (X - m.norm_mean) / m.norm_std


def _logits(weights: list[np.ndarray], biases: list[np.ndarray], Z: np.ndarray) -> np.ndarray:
    a = Z
    for W, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ W + b)
    return (a @ weights[-1] + biases[-1])[:, 0]


def predict_proba(m: MlpModel, X: np.ndarray) -> np.ndarray:
    """P(label = Pie) for each row of X."""
    return expit(_logits(m.weights, m.biases, normalize(m, X)))


def mlp_forward(m: MlpModel, x: np.ndarray) -> float:
    """P(label = Pie) for a single raw feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n_inputs,):
        raise ShapeError(f"expected a vector of {m.n_inputs} features, got shape {x.shape}")
    return float(predict_proba(m, x[None, :])[0])


def penalised_loss_and_grad(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    Z: np.ndarray,
    y: np.ndarray,
    l2_alpha: float,
) -> tuple[float, Gradients]:
    """Loss and backprop gradients on already-normalised inputs Z."""
    n = Z.shape[0]
    activations = [Z]
    a = Z
    for W, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ W + b)
        activations.append(a)
    z = (a @ weights[-1] + biases[-1])[:, 0]

    # log(1 + e^z) - y z is the cross-entropy of sigmoid(z)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += l2_alpha * sum(float(np.sum(W * W)) for W in weights)

    delta = ((expit(z) - y) / n)[:, None]
    grad_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        a_prev = activations[layer]
        grad_w[layer] = a_prev.T @ delta + 2.0 * l2_alpha * weights[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (1.0 - a_prev * a_prev)
    return loss, Gradients(grad_w, grad_b)


def loss_and_grad(
    m: MlpModel, X: np.ndarray, y: np.ndarray, l2_alpha: float
) -> tuple[float, Gradients]:
    """Mean binary cross-entropy plus l2_alpha * sum of squared weights."""
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ShapeError("loss_and_grad needs a nonempty batch")
    return penalised_loss_and_grad(m.weights, m.biases, normalize(m, X), y, l2_alpha)


def pack(weights: list[np.ndarray], biases: list[np.ndarray]) -> np.ndarray:
    """Flatten weights and biases, layer by layer, into one vector."""
    parts = []
    for W, b in zip(weights, biases):
        parts.append(W.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def unpack(theta: np.ndarray, layer_sizes: list[int]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Inverse of pack."""
    weights, biases = [], []
    pos = 0
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        size = fan_in * fan_out
        weights.append(theta[pos : pos + size].reshape(fan_in, fan_out))
        pos += size
        biases.append(theta[pos : pos + fan_out])
        pos += fan_out
    return weights, biases


def param_hash(m: MlpModel) -> str:
    """SHA-256 of the packed parameters."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(pack(m.weights, m.biases)).tobytes())
    digest.update(np.ascontiguousarray(m.norm_mean).tobytes())
    digest.update(np.ascontiguousarray(m.norm_std).tobytes())
    return digest.hexdigest()


def model_to_dict(m: MlpModel) -> dict[str, Any]:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_sizes": list(m.layer_sizes),
        "weights": [W.tolist() for W in m.weights],
        "biases": [b.tolist() for b in m.biases],
        "norm_mean": m.norm_mean.tolist(),
        "norm_std": m.norm_std.tolist(),
        "config": config_to_dict(m.config) if m.config is not None else None,
    }


def model_from_dict(doc: dict[str, Any]) -> MlpModel:
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ShapeError(f"unsupported model format version {version!r}")
    return MlpModel(
        layer_sizes=[int(n) for n in doc["layer_sizes"]],
        weights=[np.asarray(W, dtype=float) for W in doc["weights"]],
        biases=[np.asarray(b, dtype=float) for b in doc["biases"]],
        norm_mean=np.asarray(doc["norm_mean"], dtype=float),
        norm_std=np.asarray(doc["norm_std"], dtype=float),
        config=train_config_from_dict(doc["config"]) if doc.get("config") else None,
    )
