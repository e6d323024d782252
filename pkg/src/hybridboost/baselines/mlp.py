from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import ConfigError, DivergenceError


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: int = 5
    activation: str = "logistic"
    epochs: int = 2000
    learning_rate: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ConfigError("hidden_units must be at least 1")
        if self.activation != "logistic":
            raise ConfigError("only the logistic activation is supported")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ConfigError("epochs must be >= 0 and learning_rate > 0")


def init_params(p: int, hidden: int, rng: np.random.Generator) -> dict:
    return {
        "W1": rng.normal(0.0, 1.0 / np.sqrt(max(p, 1)), size=(p, hidden)),
        "b1": np.zeros(hidden),
        "w2": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden),
        "b2": np.zeros(1),
    }


def pack(params: dict) -> np.ndarray:
    return np.concatenate([params[k].ravel() for k in ("W1", "b1", "w2", "b2")])


def unpack(theta: np.ndarray, p: int, hidden: int) -> dict:
    sizes = [p * hidden, hidden, hidden, 1]
    parts = np.split(np.asarray(theta, dtype=float), np.cumsum(sizes)[:-1])
    return {"W1": parts[0].reshape(p, hidden), "b1": parts[1], "w2": parts[2], "b2": parts[3]}


def forward(params: dict, X: np.ndarray):
    A = expit(X @ params["W1"] + params["b1"])
    out = A @ params["w2"] + params["b2"][0]
    return A, out


def loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    """Mean cross-entropy and its analytic gradient."""
    n = X.shape[0]
    A, out = forward(params, X)
    loss = float(np.mean(np.logaddexp(0.0, out) - y * out))
    d_out = (expit(out) - y) / n
    dA = np.outer(d_out, params["w2"]) * A * (1.0 - A)
    grads = {
        "W1": X.T @ dA,
        "b1": dA.sum(axis=0),
        "w2": A.T @ d_out,
        "b2": np.array([d_out.sum()]),
    }
    return loss, grads


@dataclass
class Mlp:
    params: dict
    mean: np.ndarray
    scale: np.ndarray
    config: MlpConfig
    loss_path: list[float] = field(default_factory=list)

    def predict_proba(self, X) -> np.ndarray:
        Xs = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return expit(forward(self.params, Xs)[1])


def fit_mlp(design, y, cfg: MlpConfig | None = None) -> Mlp:
    """One logistic hidden layer, logistic output, full-batch gradient descent."""
    cfg = cfg or MlpConfig()
    X = np.asarray(getattr(design, "X", design), dtype=float)
    y = np.asarray(y, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Xs = (X - mean) / scale
    rng = np.random.default_rng(cfg.seed)
    params = init_params(X.shape[1], cfg.hidden_units, rng)
    path = []
    for _ in range(cfg.epochs):
        loss, grads = loss_and_grad(params, Xs, y)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"training loss became non-finite; lower learning_rate (now {cfg.learning_rate})"
            )
        path.append(loss)
        for k in params:
            params[k] = params[k] - cfg.learning_rate * grads[k]
    final, _ = loss_and_grad(params, Xs, y)
    if not np.isfinite(final):
        raise DivergenceError(
            f"training loss became non-finite; lower learning_rate (now {cfg.learning_rate})"
        )
    path.append(final)
    return Mlp(params, mean, scale, cfg, path)
