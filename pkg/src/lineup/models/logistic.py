"""L2-regularized logistic regression trained by full-batch gradient descent.

Features are standardized internally (stats from the training rows); the
learned weights therefore live on the standardized scale, which is also the
scale used for global importance.
"""
from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def standardize_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and std; constant columns get std 1 so they map to 0."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def loss_and_gradient(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y: np.ndarray,
    l2_penalty: float,
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy + (l2/2)||w||^2 (bias unpenalized) and its gradient."""
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += 0.5 * l2_penalty * float(w @ w)
    residual = sigmoid(z) - y
    grad_w = X.T @ residual / X.shape[0] + l2_penalty * w
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    learning_rate: float,
    l2_penalty: float,
    epochs: int,
) -> dict:
    """Gradient descent from zero init; returns weights, bias, and the
    standardization stats needed to reproduce predictions."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    mean, std = standardize_stats(X)
    Xs = (X - mean) / std
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(int(epochs)):
        _, grad_w, grad_b = loss_and_gradient(w, b, Xs, y, l2_penalty)
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b
    return {"weights": w, "bias": b, "mean": mean, "std": std}


def predict_logistic(params: dict, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    Xs = (rows - params["mean"]) / params["std"]
    return sigmoid(Xs @ params["weights"] + params["bias"])
