"""Random-guess baselines that frame when a model stops learning anything.

The privacy-mode baselines (local DP, central DP, no privacy) are not
separate trainers: they are the same algorithms run with mode ``local``
(full per-party noise, no encryption), mode ``central`` (one party holds
the union and adds full noise), or mode ``none``.
"""

from __future__ import annotations

import numpy as np


def uniform_guess(n_classes: int, n_rows: int, rng: np.random.Generator) -> np.ndarray:
    """Each prediction uniform over the classes; expected accuracy 1/|C|."""
    return rng.integers(0, n_classes, size=n_rows)


def random_guess(
    train_labels: np.ndarray, n_rows: int, rng: np.random.Generator
) -> np.ndarray:
    """Predictions sampled from the training label distribution.

    Expected accuracy is sum_c p_c^2 over the class priors.
    """
    return rng.choice(np.asarray(train_labels), size=n_rows, replace=True)


def random_guess_expected_accuracy(class_priors) -> float:
    priors = np.asarray(class_priors, dtype=np.float64)
    return float((priors ** 2).sum())
