"""Seed-deterministic synthetic generators for offline testing.

CI and the acceptance suite run entirely on these; the canonical
public files are loaded instead when present on disk.
"""

from __future__ import annotations

import numpy as np

from hybridfl.data.datasets import CategoricalDataset, NumericDataset


def synth_categorical(
    n_rows: int,
    n_features: int = 8,
    n_values: int = 3,
    n_classes: int = 4,
    label_noise: float = 0.05,
    seed: int = 0,
) -> CategoricalDataset:
    """Planted-rule categorical data.

    The class is a fixed random function of the first two features; the
    remaining features are uniform distractors. ``label_noise`` flips
    that fraction of labels to a uniform random class.
    """
    if n_features < 2:
        raise ValueError("need at least two features to plant a rule")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, n_values, size=(n_rows, n_features))
    rule = rng.integers(0, n_classes, size=(n_values, n_values))
    labels = rule[rows[:, 0], rows[:, 1]]
    flip = rng.random(n_rows) < label_noise
    labels = np.where(flip, rng.integers(0, n_classes, size=n_rows), labels)

    return CategoricalDataset(
        feature_names=tuple(f"f{j}" for j in range(n_features)),
        feature_values=tuple(
            tuple(f"v{v}" for v in range(n_values)) for _ in range(n_features)
        ),
        class_values=tuple(f"c{c}" for c in range(n_classes)),
        rows=rows,
        labels=labels,
    )


def synth_linear(
    n_rows: int,
    dim: int = 500,
    margin: float = 1.0,
    n_informative: int | None = None,
    seed: int = 0,
) -> NumericDataset:
    """Linearly separable +/-1 data with a guaranteed margin.

    Signal lives in the first ``n_informative`` coordinates; the rest
    carry small noise. Every point satisfies y * <w*, x> >= margin for
    the (unit-norm) planted separator, and feature norms stay small so
    norm clipping at typical values is inactive.
    """
    if n_informative is None:
        n_informative = min(20, dim)
    if n_informative > dim:
        raise ValueError("n_informative cannot exceed dim")
    rng = np.random.default_rng(seed)
    w_star = np.zeros(dim)
    w_star[:n_informative] = rng.normal(size=n_informative)
    w_star /= np.linalg.norm(w_star)

    X = np.zeros((n_rows, dim))
    X[:, :n_informative] = rng.normal(
        scale=2.0 / np.sqrt(n_informative), size=(n_rows, n_informative)
    )
    if dim > n_informative:
        X[:, n_informative:] = rng.normal(
            scale=0.05, size=(n_rows, dim - n_informative)
        )
    z = X @ w_star
    y = np.where(z >= 0, 1, -1)
    # push every point past the planted margin
    short = y * z < margin
    X[short] += ((margin - (y * z)[short]) * y[short])[:, None] * w_star
    return NumericDataset(X, y)


def synth_multiclass(
    n_rows: int,
    dim: int = 784,
    n_classes: int = 10,
    center_scale: float = 0.25,
    within_std: float = 1.0,
    seed: int = 0,
) -> NumericDataset:
    """Gaussian class blobs in ``dim`` dimensions with balanced labels."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=center_scale, size=(n_classes, dim))
    y = rng.integers(0, n_classes, size=n_rows)
    X = centers[y] + rng.normal(scale=within_std, size=(n_rows, dim))
    return NumericDataset(X, y)
