"""In-memory dataset containers. Immutable after load; safe to share."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CategoricalDataset:
    """Rows of categorical value indices plus a class column.

    ``rows[i, j]`` indexes into ``feature_values[j]``; ``labels[i]``
    indexes into ``class_values``. No missing values.
    """

    feature_names: tuple[str, ...]
    feature_values: tuple[tuple[str, ...], ...]
    class_values: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        if rows.ndim != 2 or rows.shape[1] != len(self.feature_names):
            raise ValueError("rows shape does not match feature names")
        if labels.shape != (rows.shape[0],):
            raise ValueError("labels length does not match rows")
        for j, vocab in enumerate(self.feature_values):
            col = rows[:, j]
            if col.size and (col.min() < 0 or col.max() >= len(vocab)):
                raise ValueError(f"feature {j} index outside its vocabulary")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_values)):
            raise ValueError("class index outside the class vocabulary")
        rows.setflags(write=False)
        labels.setflags(write=False)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_values)

    def subset(self, indices: np.ndarray) -> "CategoricalDataset":
        return CategoricalDataset(
            self.feature_names,
            self.feature_values,
            self.class_values,
            self.rows[indices],
            self.labels[indices],
        )

    def class_distribution(self) -> np.ndarray:
        counts = np.bincount(self.labels, minlength=self.n_classes)
        return counts / max(1, len(self))


@dataclass(frozen=True)
class NumericDataset:
    """Dense real feature matrix with integer or +/-1 labels."""

    X: np.ndarray
    y: np.ndarray
    feature_dim: int = field(default=0)

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if y.shape != (X.shape[0],):
            raise ValueError("label count does not match row count")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        object.__setattr__(self, "feature_dim", X.shape[1])
        X.setflags(write=False)
        y.setflags(write=False)

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, indices: np.ndarray) -> "NumericDataset":
        return NumericDataset(self.X[indices], self.y[indices])
