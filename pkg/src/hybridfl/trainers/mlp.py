"""Feedforward ReLU network with differentially private local epochs.

The network is fully connected with a softmax cross-entropy head. A
local epoch is Poisson-sampled minibatch SGD with per-example gradient
clipping: each example's gradient is rescaled to norm at most ``clip``,
the batch sum gets Gaussian noise with std ``clip * sigma / sqrt(t-1)``
per coordinate, and the noisy sum is divided by the batch size before
the step.

Per-example clipping never materializes per-example weight gradients:
for a dense layer the example gradient is an outer product, so its
squared norm is ||delta||^2 * (1 + ||activation||^2) and the clipped sum
is a single matmul with rescaled deltas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MlpHyper:
    """Local-epoch hyperparameters (trust enters via the noise std)."""

    clip: float = 4.0
    sigma: float = 8.0
    lr: float = 0.1
    batch_rate: float = 0.01
    epochs: int = 1

    def __post_init__(self) -> None:
        if self.clip <= 0:
            raise ValueError("clip must be positive")
        if not 0 < self.batch_rate <= 1:
            raise ValueError("batch_rate must lie in (0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class MlpModel:
    """Weights and biases for layer_sizes[0] -> ... -> layer_sizes[-1]."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def init_random(cls, layer_sizes, rng: np.random.Generator) -> "MlpModel":
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(list(layer_sizes), weights, biases)

    @property
    def n_params(self) -> int:
        return param_count(self.layer_sizes)

    def to_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, layer_sizes, vec: np.ndarray) -> "MlpModel":
        if vec.shape != (param_count(layer_sizes),):
            raise ValueError("parameter vector does not match architecture")
        weights, biases = [], []
        offset = 0
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            weights.append(vec[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out))
            offset += fan_in * fan_out
            biases.append(vec[offset : offset + fan_out])
            offset += fan_out
        return cls(list(layer_sizes), weights, biases)


def param_count(layer_sizes) -> int:
    return sum(
        fan_in * fan_out + fan_out
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:])
    )


def forward(model: MlpModel, X: np.ndarray):
    """Return logits and per-layer activations (inputs included)."""
    activations = [X]
    h = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return activations[-1], activations


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_probs(model: MlpModel, X: np.ndarray, y: np.ndarray):
    logits, activations = forward(model, X)
    probs = softmax(logits)
    nll = -np.log(np.clip(probs[np.arange(len(y)), y], 1e-300, None))
    return float(nll.mean()), probs, activations


def _per_layer_deltas(model, probs, activations, y):
    """Backpropagated per-example deltas for each layer, summed-loss scale."""
    deltas = []
    delta = probs.copy()
    delta[np.arange(len(y)), y] -= 1.0  # d(per-example NLL)/d(logits)
    deltas.append(delta)
    for i in range(len(model.weights) - 1, 0, -1):
        delta = delta @ model.weights[i].T
        delta = delta * (activations[i] > 0)
        deltas.append(delta)
    deltas.reverse()
    return deltas


def gradients(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Mean-loss gradients as (weight grads, bias grads)."""
    _, probs, activations = loss_and_probs(model, X, y)
    deltas = _per_layer_deltas(model, probs, activations, y)
    n = len(y)
    gw = [activations[i].T @ deltas[i] / n for i in range(len(deltas))]
    gb = [deltas[i].mean(axis=0) for i in range(len(deltas))]
    return gw, gb


def clipped_gradient_sum(model: MlpModel, X: np.ndarray, y: np.ndarray, clip: float):
    """Sum over examples of per-example gradients clipped to norm <= clip."""
    _, probs, activations = loss_and_probs(model, X, y)
    deltas = _per_layer_deltas(model, probs, activations, y)
    sq_norms = np.zeros(len(y))
    for i, delta in enumerate(deltas):
        d2 = (delta ** 2).sum(axis=1)
        a2 = (activations[i] ** 2).sum(axis=1)
        sq_norms += d2 * (1.0 + a2)  # weight outer product plus bias term
    scale = np.minimum(1.0, clip / np.maximum(np.sqrt(sq_norms), 1e-300))
    gw, gb = [], []
    for i, delta in enumerate(deltas):
        scaled = delta * scale[:, None]
        gw.append(activations[i].T @ scaled)
        gb.append(scaled.sum(axis=0))
    return gw, gb


def local_train_epoch(
    X: np.ndarray,
    y: np.ndarray,
    layer_sizes,
    params: np.ndarray,
    hyper: MlpHyper,
    noise_std: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One local epoch of private SGD; returns the updated flat parameters.

    ``noise_std`` is the per-coordinate std added to each batch's clipped
    gradient sum (``clip * sigma / sqrt(t-1)`` under the trust model, 0
    when privacy is off). Empty Poisson batches are resampled once and
    then skipped without noise.
    """
    model = MlpModel.from_vector(layer_sizes, params.copy())
    n_batches = int(np.ceil(1.0 / hyper.batch_rate))
    for _ in range(n_batches):
        mask = rng.random(len(X)) < hyper.batch_rate
        if not mask.any():
            mask = rng.random(len(X)) < hyper.batch_rate
            if not mask.any():
                continue
        bx, by = X[mask], y[mask]
        gw, gb = clipped_gradient_sum(model, bx, by, hyper.clip)
        batch = float(mask.sum())
        for i in range(len(gw)):
            if noise_std > 0:
                gw[i] = gw[i] + rng.normal(0.0, noise_std, size=gw[i].shape)
                gb[i] = gb[i] + rng.normal(0.0, noise_std, size=gb[i].shape)
            model.weights[i] -= hyper.lr * gw[i] / batch
            model.biases[i] -= hyper.lr * gb[i] / batch
    return model.to_vector()


def predict(model: MlpModel, X: np.ndarray) -> np.ndarray:
    logits, _ = forward(model, X)
    return logits.argmax(axis=1)
