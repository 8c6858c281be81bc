import numpy as np
import pytest

from src.optim import adam_minimize, lbfgs_minimize, sgd_minimize


def _quadratic(A, b):
    def f(x):
        return 0.5 * x @ A @ x - b @ x, A @ x - b

    return f


def _rosenbrock(x):
    a, c = x
    f = (1 - a) ** 2 + 100 * (c - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (c - a * a), 200 * (c - a * a)])
    return f, g


def test_lbfgs_solves_small_quadratic():
    A = np.diag([1.0, 3.0, 10.0])
    b = np.array([1.0, -2.0, 5.0])
    result = lbfgs_minimize(_quadratic(A, b), np.zeros(3), tol=1e-10)
    assert result.converged
    np.testing.assert_allclose(result.x, np.linalg.solve(A, b), atol=1e-8)


def test_lbfgs_stationary_start_takes_no_steps():
    A = np.eye(2)
    b = np.array([1.0, 2.0])
    result = lbfgs_minimize(_quadratic(A, b), b.copy())
    assert result.n_iter == 0
    assert result.converged


def test_lbfgs_rosenbrock():
    result = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), max_iter=200, tol=1e-9)
    assert result.fun < 1e-8
    np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-3)


def test_lbfgs_never_increases_objective():
    x0 = np.array([-1.2, 1.0])
    result = lbfgs_minimize(_rosenbrock, x0, max_iter=30)
    assert result.fun <= _rosenbrock(x0)[0]


def test_lbfgs_stops_at_max_iter():
    result = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), max_iter=3, tol=1e-12)
    assert result.n_iter == 3
    assert not result.converged


def test_lbfgs_memory_must_be_positive():
    with pytest.raises(ValueError):
        lbfgs_minimize(_rosenbrock, np.zeros(2), memory=0)


def _least_squares(X, t):
    def f_batch(w, idx):
        r = X[idx] @ w - t[idx]
        return float(r @ r / len(idx)), 2 * X[idx].T @ r / len(idx)

    return f_batch


def test_sgd_and_adam_reach_least_squares_solution():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 3))
    w_true = np.array([1.0, -2.0, 0.5])
    t = X @ w_true
    f_batch = _least_squares(X, t)
    sgd = sgd_minimize(f_batch, np.zeros(3), 100, np.random.default_rng(1),
                       learning_rate=0.05, batch_size=20, max_iter=500, tol=1e-8)
    adam = adam_minimize(f_batch, np.zeros(3), 100, np.random.default_rng(1),
                         learning_rate=0.01, batch_size=20, max_iter=2000, tol=1e-5)
    np.testing.assert_allclose(sgd.x, w_true, atol=1e-4)
    np.testing.assert_allclose(adam.x, w_true, atol=1e-2)


def test_sgd_is_reproducible_for_a_given_rng():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 2))
    t = X @ np.array([0.3, 0.7]) + 0.1 * rng.normal(size=50)
    f_batch = _least_squares(X, t)
    a = sgd_minimize(f_batch, np.zeros(2), 50, np.random.default_rng(5), batch_size=8, max_iter=20)
    b = sgd_minimize(f_batch, np.zeros(2), 50, np.random.default_rng(5), batch_size=8, max_iter=20)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.n_iter == b.n_iter == 20
