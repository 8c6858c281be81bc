"""Gradient-based minimisers: L-BFGS, minibatch SGD and Adam."""

import logging
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]
BatchObjective = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    converged: bool
    message: str = ""


def _two_loop(g: np.ndarray, s_hist: deque, y_hist: deque) -> np.ndarray:
    """Approximate inverse-Hessian product H @ g from the stored curvature pairs."""
    q = g.copy()
    coeffs = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        coeffs.append((rho, a))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(coeffs)):
        b = rho * (y @ q)
        q += s * (a - b)
    return q


def lbfgs_minimize(
    f: Objective,
    x0: np.ndarray,
    memory: int = 10,
    max_iter: int = 200,
    tol: float = 1e-8,
    c1: float = 1e-4,
    max_backtracks: int = 40,
) -> OptimizeResult:
    """Limited-memory BFGS with Armijo backtracking.

    Stops when the gradient's infinity norm drops below tol. A failed line
    search returns the best point so far with converged=False.
    """
    if memory < 1:
        raise ValueError("memory must be >= 1")
    x = np.array(x0, dtype=float)
    fx, g = f(x)
    if np.max(np.abs(g), initial=0.0) < tol:
        return OptimizeResult(x, fx, g, 0, True, "initial point is stationary")

    s_hist: deque[np.ndarray] = deque(maxlen=memory)
    y_hist: deque[np.ndarray] = deque(maxlen=memory)
    for it in range(1, max_iter + 1):
        d = -_two_loop(g, s_hist, y_hist)
        slope = g @ d
        if not slope < 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            slope = g @ d

        step = 1.0
        for _ in range(max_backtracks):
            x_new = x + step * d
            f_new, g_new = f(x_new)
            if np.isfinite(f_new) and f_new <= fx + c1 * step * slope:
                break
            step *= 0.5
        else:
            logger.debug("line search failed at iteration %d (f=%.6g)", it, fx)
            return OptimizeResult(x, fx, g, it, False, "line search failed")

        s = x_new - x
        y = g_new - g
        if s @ y > 1e-12 * (y @ y):
            s_hist.append(s)
            y_hist.append(y)
        x, fx, g = x_new, f_new, g_new
        if np.max(np.abs(g)) < tol:
            return OptimizeResult(x, fx, g, it, True, "gradient below tolerance")

    return OptimizeResult(x, fx, g, max_iter, False, "max_iter reached")


def _minibatches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def sgd_minimize(
    f_batch: BatchObjective,
    x0: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    learning_rate: float = 0.01,
    batch_size: int = 200,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> OptimizeResult:
    """Plain minibatch SGD; max_iter counts epochs."""
    x = np.array(x0, dtype=float)
    everything = np.arange(n_samples)
    for epoch in range(1, max_iter + 1):
        for idx in _minibatches(n_samples, batch_size, rng):
            _, g = f_batch(x, idx)
            x -= learning_rate * g
        fx, g = f_batch(x, everything)
        if np.max(np.abs(g)) < tol:
            return OptimizeResult(x, fx, g, epoch, True, "gradient below tolerance")
    fx, g = f_batch(x, everything)
    return OptimizeResult(x, fx, g, max_iter, False, "max_iter reached")


def adam_minimize(
    f_batch: BatchObjective,
    x0: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    learning_rate: float = 0.001,
    batch_size: int = 200,
    max_iter: int = 200,
    tol: float = 1e-6,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> OptimizeResult:
    """Adam with bias-corrected moments; max_iter counts epochs."""
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    t = 0
    everything = np.arange(n_samples)
    for epoch in range(1, max_iter + 1):
        for idx in _minibatches(n_samples, batch_size, rng):
            _, g = f_batch(x, idx)
            t += 1
            m = beta1 * m + (1 - beta1) * g
            v = beta2 * v + (1 - beta2) * g * g
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            x -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        fx, g = f_batch(x, everything)
        if np.max(np.abs(g)) < tol:
            return OptimizeResult(x, fx, g, epoch, True, "gradient below tolerance")
    fx, g = f_batch(x, everything)
    return OptimizeResult(x, fx, g, max_iter, False, "max_iter reached")
