"""Horizontal partitioning of a dataset into equal party shards."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TooManyPartiesError(ValueError):
    """More parties than rows to distribute."""


@dataclass(frozen=True)
class PartitionPlan:
    """Disjoint, exhaustive row assignment; shard sizes differ by <= 1."""

    n_parties: int
    assignments: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.assignments) != self.n_parties:
            raise ValueError("one assignment per party required")

    @property
    def sizes(self) -> list[int]:
        return [len(a) for a in self.assignments]


def partition(n_rows: int, n_parties: int, seed: int) -> PartitionPlan:
    """Shuffle rows and split them evenly; first shards take remainders."""
    if n_parties < 1:
        raise ValueError("need at least one party")
    if n_parties > n_rows:
        raise TooManyPartiesError(f"{n_parties} parties for {n_rows} rows")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_rows)
    shards = np.array_split(order, n_parties)
    return PartitionPlan(
        n_parties=n_parties,
        assignments=tuple(np.sort(s) for s in shards),
    )
