"""Single-hidden-layer tanh network trained by full-batch gradient descent.

Fixed recipe: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization for
weights and biases, constant step size, mean-squared-error loss.  The model
exposes its flat parameter vector, per-row output gradients with respect to
parameters, and evaluation at shifted parameters; the lazy retraining test
is built on those three operations.
"""

from __future__ import annotations

import numpy as np

from ..core import NumericalError, RngStream, ValidationError


class MlpModel:
    """Parameters and forward pass of h(x) = w2 . tanh(W1 x + b1) + b2."""

    def __init__(self, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: float):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = float(b2)
        self.width, self.input_dim = self.w1.shape
        self.param_count = self.width * self.input_dim + 2 * self.width + 1

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValidationError(
                f"predict expects shape (n, {self.input_dim}), got {x.shape}"
            )
        return x

    def hidden(self, x: np.ndarray) -> np.ndarray:
        return np.tanh(self._check(x) @ self.w1.T + self.b1)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.hidden(x) @ self.w2 + self.b2

    def params_vector(self) -> np.ndarray:
        """Flat layout: [W1 row-major, b1, w2, b2]."""
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def with_params(self, theta: np.ndarray) -> "MlpModel":
        theta = np.asarray(theta, dtype=np.float64).ravel()
        if theta.shape[0] != self.param_count:
            raise ValidationError(
                f"expected {self.param_count} parameters, got {theta.shape[0]}"
            )
        w, p = self.width, self.input_dim
        w1 = theta[: w * p].reshape(w, p)
        b1 = theta[w * p : w * p + w]
        w2 = theta[w * p + w : w * p + 2 * w]
        b2 = theta[-1]
        return MlpModel(w1, b1, w2, b2)

    def param_gradient_matrix(self, x: np.ndarray) -> np.ndarray:
        """Rows are d h(x_i) / d theta in params_vector() layout."""
        x = self._check(x)
        a = np.tanh(x @ self.w1.T + self.b1)
        s = (1.0 - a * a) * self.w2  # (n, width)
        g_w1 = (s[:, :, None] * x[:, None, :]).reshape(x.shape[0], -1)
        g_b2 = np.ones((x.shape[0], 1))
        return np.concatenate([g_w1, s, a, g_b2], axis=1)


def fit_mlp(
    x: np.ndarray,
    y: np.ndarray,
    width: int,
    step: float,
    epochs: int,
    rng: RngStream,
) -> MlpModel:
    n, p = x.shape
    gen = rng.generator()
    bound1 = 1.0 / np.sqrt(p)
    bound2 = 1.0 / np.sqrt(width)
    w1 = gen.uniform(-bound1, bound1, size=(width, p))
    b1 = gen.uniform(-bound1, bound1, size=width)
    w2 = gen.uniform(-bound2, bound2, size=width)
    b2 = float(gen.uniform(-bound2, bound2))

    for epoch in range(int(epochs)):
        a = np.tanh(x @ w1.T + b1)
        err = a @ w2 + b2 - y
        loss = float(err @ err) / n
        if not np.isfinite(loss):
            raise NumericalError(f"mlp training diverged at epoch {epoch} (loss not finite)")
        g = (2.0 / n) * err
        grad_w2 = a.T @ g
        grad_b2 = float(g.sum())
        dz = (g[:, None] * w2) * (1.0 - a * a)
        grad_w1 = dz.T @ x
        grad_b1 = dz.sum(axis=0)
        w1 -= step * grad_w1
        b1 -= step * grad_b1
        w2 -= step * grad_w2
        b2 -= step * grad_b2
    model = MlpModel(w1, b1, w2, b2)
    if not np.all(np.isfinite(model.params_vector())):
        raise NumericalError("mlp training produced non-finite parameters")
    return model
