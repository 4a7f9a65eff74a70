"""Binary logistic regression trained by deterministic full-batch descent.

The feature dimension downstream of the diffusion map is tiny (4-5, at
most 160 for raw features), so full-batch gradient descent with a
backtracking line search is exact, reproducible (zero initialization),
and fast. L2 regularization keeps weights bounded on separable data.
Class imbalance is handled with inverse-frequency sample weights,
enabled by default.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .container import load_container, save_container
from .errors import DataError

DEFAULT_L2 = 1e-4
DEFAULT_MAX_ITERS = 5000
DEFAULT_GRAD_TOL = 1e-8


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    n_iterations: int
    final_loss: float
    l2: float
    loss_history: np.ndarray = field(default_factory=lambda: np.empty(0))


def _loss_and_grad(theta, X, y, sample_weights, l2):
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # softplus(z) - y*z is the stable per-sample cross entropy
    bce = np.logaddexp(0.0, z) - y * z
    n = X.shape[0]
    loss = float(np.dot(sample_weights, bce) / n + 0.5 * l2 * np.dot(w, w))
    residual = sample_weights * (expit(z) - y)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ residual / n + l2 * w
    grad[-1] = residual.sum() / n
    return loss, grad


def train(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = DEFAULT_L2,
    max_iters: int = DEFAULT_MAX_ITERS,
    grad_tol: float = DEFAULT_GRAD_TOL,
    balance_classes: bool = True,
    init: np.ndarray = None,
) -> LogisticModel:
    """Minimize weighted mean cross-entropy + 0.5 * l2 * ||w||^2.

    Gradient descent with Armijo backtracking; stops at gradient norm
    grad_tol or after max_iters. `init` overrides the zero start (used
    to probe convexity); training is deterministic either way.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n, d = X.shape
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == n:
        raise DataError("training data contains a single class; need both")

    if balance_classes:
        w_pos = n / (2.0 * n_pos)
        w_neg = n / (2.0 * (n - n_pos))
        sample_weights = np.where(y == 1.0, w_pos, w_neg)
    else:
        sample_weights = np.ones(n)

    theta = np.zeros(d + 1) if init is None else np.asarray(init, dtype=np.float64).copy()
    if theta.size != d + 1:
        raise ValueError(f"init must have length {d + 1}")

    loss, grad = _loss_and_grad(theta, X, y, sample_weights, l2)
    history = [loss]
    step = 1.0
    iterations = 0
    for iterations in range(1, max_iters + 1):
        gnorm2 = float(np.dot(grad, grad))
        if np.sqrt(gnorm2) <= grad_tol:
            iterations -= 1
            break
        step = min(step * 2.0, 1e6)
        for _ in range(60):
            candidate = theta - step * grad
            new_loss, new_grad = _loss_and_grad(candidate, X, y, sample_weights, l2)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
        else:
            break  # no acceptable step: numerically converged
        theta, loss, grad = candidate, new_loss, new_grad
        history.append(loss)

    return LogisticModel(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        n_iterations=iterations,
        final_loss=loss,
        l2=l2,
        loss_history=np.array(history),
    )


def score(model: LogisticModel, x: np.ndarray) -> float:
    """Spoof probability sigma(w . x + b) for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(
            f"dimension mismatch: vector {x.shape}, model {model.weights.shape}"
        )
    return float(expit(x @ model.weights + model.bias))


def score_batch(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.size:
        raise ValueError(
            f"dimension mismatch: matrix {X.shape}, model dim {model.weights.size}"
        )
    return expit(X @ model.weights + model.bias)


def save_logistic(model: LogisticModel, path, meta: dict = None) -> None:
    merged = {
        "l2": model.l2,
        "n_iterations": model.n_iterations,
        "final_loss": model.final_loss,
    }
    merged.update(meta or {})
    save_container(
        path,
        "logistic_model",
        merged,
        {
            "weights": model.weights,
            "bias": np.array([model.bias]),
            "loss_history": model.loss_history,
        },
    )


def load_logistic(path) -> LogisticModel:
    meta, arrays = load_container(path, expected_kind="logistic_model")
    return LogisticModel(
        weights=arrays["weights"],
        bias=float(arrays["bias"][0]),
        n_iterations=int(meta["n_iterations"]),
        final_loss=float(meta["final_loss"]),
        l2=float(meta["l2"]),
        loss_history=arrays["loss_history"],
    )
