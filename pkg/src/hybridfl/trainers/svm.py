"""L2-regularized linear SVM with hinge loss, trained by noisy subgradient.

Loss: mean over (x, y) of max(0, 1 - y<w, x>) plus lam * ||w||^2.
Feature vectors are norm-clipped once per shard to bound the gradient
sensitivity; each full-batch subgradient step then adds isotropic
Gaussian noise with variance sigma^2/(t-1) per coordinate, exactly as
the update rule is written (no clip factor; see
``scale_noise_by_clip`` for the optional variant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SvmHyper:
    clip: float = 4.0
    sigma: float = 4.0
    lr: float = 0.01
    lam: float = 1e-4
    epochs_per_query: int = 10
    epochs: int = 100
    scale_noise_by_clip: bool = False

    def __post_init__(self) -> None:
        if self.clip <= 0:
            raise ValueError("clip must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.epochs_per_query < 1 or self.epochs < 1:
            raise ValueError("epoch counts must be >= 1")


@dataclass
class SvmModel:
    w: np.ndarray
    lam: float = 1e-4

    @classmethod
    def zeros(cls, dim: int, lam: float = 1e-4) -> "SvmModel":
        return cls(np.zeros(dim), lam)


def clip_features(X: np.ndarray, clip: float) -> np.ndarray:
    """Rescale each row to L2 norm at most ``clip``."""
    norms = np.linalg.norm(X, axis=1)
    scale = np.minimum(1.0, clip / np.maximum(norms, 1e-300))
    return X * scale[:, None]


def hinge_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    margins = 1.0 - y * (X @ w)
    return float(np.maximum(margins, 0.0).mean() + lam * w @ w)


def subgradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Subgradient of the mean hinge loss plus the regularizer."""
    violating = (1.0 - y * (X @ w)) > 0
    g = -(X[violating] * y[violating, None]).sum(axis=0) / len(X)
    return g + 2.0 * lam * w


def local_train_epochs(
    X_clipped: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    hyper: SvmHyper,
    noise_std: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """K full-batch noisy subgradient steps on an already-clipped shard."""
    if len(X_clipped) == 0:
        raise ValueError("empty shard")
    w = w.copy()
    for _ in range(hyper.epochs_per_query):
        g = subgradient(w, X_clipped, y, hyper.lam)
        if noise_std > 0:
            g = g + rng.normal(0.0, noise_std, size=g.shape)
        w -= hyper.lr * g
    return w


def predict(model: SvmModel, X: np.ndarray) -> np.ndarray:
    return np.where(X @ model.w >= 0, 1, -1)
