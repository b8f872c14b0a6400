"""Private ID3 decision trees over federated count queries.

Tree construction follows the fixed-budget recipe: the total budget is
split evenly over the d+1 tree levels (eps1 = eps/(2(d+1))), each node
spends eps1 on its total count and eps1 on its second phase (leaf class
counts, or feature evaluation at eps2 = eps1/(2|F|) per query, parallel
across a feature's disjoint value subsets). Recursion stops on an empty
feature set, exhausted depth, or when noisy counts drop below the
meaningful-signal threshold N/(f|C|) < sqrt(2)/eps1.

The split score for a candidate feature is
V_F = sum_i sum_c N_ic * log(N_ic / N_i), maximized over features;
noisy counts are clamped at zero and degenerate terms contribute 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from hybridfl.dpcore import PrivacyParams
from hybridfl.federation import Session
from hybridfl.federation.messages import KIND_CLASS_COUNTS, KIND_COUNTS


@dataclass
class TreeNode:
    """Internal node (feature set, children per value) or leaf (label)."""

    label: int
    feature: Optional[int] = None
    children: dict[int, "TreeNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "feature": self.feature,
            "children": {str(v): c.to_dict() for v, c in self.children.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        return cls(
            label=d["label"],
            feature=d["feature"],
            children={
                int(v): cls.from_dict(c) for v, c in d["children"].items()
            },
        )


@dataclass
class TreeModel:
    root: TreeNode
    feature_names: tuple[str, ...]
    feature_values: tuple[tuple[str, ...], ...]
    class_values: tuple[str, ...]
    depth_bound: int

    def to_dict(self) -> dict:
        return {
            "root": self.root.to_dict(),
            "feature_names": list(self.feature_names),
            "feature_values": [list(v) for v in self.feature_values],
            "class_values": list(self.class_values),
            "depth_bound": self.depth_bound,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(
            root=TreeNode.from_dict(d["root"]),
            feature_names=tuple(d["feature_names"]),
            feature_values=tuple(tuple(v) for v in d["feature_values"]),
            class_values=tuple(d["class_values"]),
            depth_bound=d["depth_bound"],
        )


@dataclass(frozen=True)
class DtBudget:
    """Per-level and per-feature budget derived from the total."""

    epsilon_total: float
    depth: int

    @property
    def eps1(self) -> float:
        return self.epsilon_total / (2.0 * (self.depth + 1))

    def eps2(self, n_features: int) -> float:
        return self.eps1 / (2.0 * n_features)

    @property
    def stop_threshold(self) -> float:
        return math.sqrt(2.0) / self.eps1


def entropy(probabilities) -> float:
    """Base-2 dataset entropy; the classic utility behind the V_F score."""
    return -sum(p * math.log2(p) for p in probabilities if p > 0)


def split_score(
    value_counts, value_class_counts, log_fn: Callable[[float], float] = math.log
) -> float:
    """V_F = sum_i sum_c N_ic * log(N_ic / N_i), zero for degenerate terms.

    The argmax over features is invariant to the logarithm base.
    """
    score = 0.0
    for n_i, n_ic in zip(value_counts, value_class_counts):
        if n_i <= 0:
            continue
        for n in n_ic:
            if n > 0:
                score += n * log_fn(n / n_i)
    return score


class CountProvider:
    """Where the tree builder gets its (noisy) counts from."""

    def counts(self, splits, epsilon) -> float:
        raise NotImplementedError

    def class_counts(self, splits, epsilon) -> list[float]:
        raise NotImplementedError


class FederatedCounts(CountProvider):
    """Counts via protocol rounds; noisy in privacy modes, exact in none."""

    def __init__(self, session: Session, n_classes: int) -> None:
        self.session = session
        self.n_classes = n_classes

    def _privacy(self, epsilon) -> Optional[PrivacyParams]:
        if self.session.config.mode == "none" or epsilon is None:
            return None
        return PrivacyParams(
            epsilon=epsilon,
            sensitivity=1.0,
            trust_t=max(2, self.session.config.trust_t),
            n_parties=self.session.config.n_parties,
        )

    def counts(self, splits, epsilon) -> float:
        got = self.session.run_query(
            KIND_COUNTS, {"splits": list(splits)}, self._privacy(epsilon)
        )
        return max(0.0, got[0])

    def class_counts(self, splits, epsilon) -> list[float]:
        got = self.session.run_query(
            KIND_CLASS_COUNTS,
            {"splits": list(splits)},
            self._privacy(epsilon),
            response_length=self.n_classes,
        )
        return [max(0.0, v) for v in got]


class DirectCounts(CountProvider):
    """Exact counts straight off a dataset; the centralized oracle."""

    def __init__(self, dataset) -> None:
        self.dataset = dataset

    def _mask(self, splits) -> np.ndarray:
        mask = np.ones(len(self.dataset), dtype=bool)
        for feature, value in splits:
            mask &= self.dataset.rows[:, int(feature)] == int(value)
        return mask

    def counts(self, splits, epsilon) -> float:
        return float(self._mask(splits).sum())

    def class_counts(self, splits, epsilon) -> list[float]:
        mask = self._mask(splits)
        counts = np.bincount(
            self.dataset.labels[mask], minlength=self.dataset.n_classes
        )
        return [float(c) for c in counts]


class _TreeBuilder:
    def __init__(
        self,
        provider: CountProvider,
        schema,
        budget: Optional[DtBudget],
        ledger=None,
    ) -> None:
        self.provider = provider
        self.schema = schema
        self.budget = budget
        self.ledger = ledger
        self._charged_levels: set[tuple[int, str]] = set()

    def _charge(self, level: int, phase: str, epsilon: float) -> None:
        # one charge per (level, phase): sibling nodes of a level work on
        # disjoint data, and a feature's value subsets are disjoint too,
        # so those queries compose in parallel, not sequentially
        if self.ledger is None or self.budget is None:
            return
        if (level, phase) in self._charged_levels:
            return
        self._charged_levels.add((level, phase))
        self.ledger.charge(f"dt/level{level}/{phase}", epsilon=epsilon)

    def _should_stop(self, n_total, features, depth_left) -> bool:
        if not features or depth_left == 0:
            return True
        if self.budget is None:
            return n_total < 1.0  # no-noise mode: stop only on empty nodes
        f = max(len(self.schema.feature_values[j]) for j in features)
        return n_total / (f * self.schema.n_classes) < self.budget.stop_threshold

    def build(self, splits, features: list[int], depth_left: int, level: int) -> TreeNode:
        eps1 = self.budget.eps1 if self.budget else None
        self._charge(level, "counts", eps1 or 0.0)
        n_total = self.provider.counts(splits, eps1)

        if self._should_stop(n_total, features, depth_left):
            self._charge(level, "scores", eps1 or 0.0)
            class_counts = self.provider.class_counts(splits, eps1)
            return TreeNode(label=int(np.argmax(class_counts)))

        eps2 = self.budget.eps2(len(features)) if self.budget else None
        self._charge(level, "scores", eps1 or 0.0)
        best_feature = None
        best_score = -math.inf
        best_class_totals = None
        for feature in features:
            value_counts = []
            value_class_counts = []
            for value in range(len(self.schema.feature_values[feature])):
                subsplits = list(splits) + [(feature, value)]
                value_counts.append(self.provider.counts(subsplits, eps2))
                value_class_counts.append(
                    self.provider.class_counts(subsplits, eps2)
                )
            score = split_score(value_counts, value_class_counts)
            if score > best_score:  # strict: ties keep the lowest index
                best_score = score
                best_feature = feature
                best_class_totals = [
                    sum(col) for col in zip(*value_class_counts)
                ]

        node = TreeNode(
            label=int(np.argmax(best_class_totals)),
            feature=best_feature,
        )
        remaining = [f for f in features if f != best_feature]
        for value in range(len(self.schema.feature_values[best_feature])):
            child_splits = list(splits) + [(best_feature, value)]
            node.children[value] = self.build(
                child_splits, remaining, depth_left - 1, level + 1
            )
        return node


def dt_train(
    session: Session,
    schema,
    epsilon: Optional[float] = None,
    depth: Optional[int] = None,
) -> TreeModel:
    """Train a tree by driving count queries through a session.

    ``schema`` is any object exposing the categorical layout
    (feature_names / feature_values / class_values); a shard works.
    ``epsilon`` is the total budget; ignored (exact counts) in mode none.
    """
    if depth is None:
        depth = len(schema.feature_names) // 2
    if session.config.mode == "none":
        budget = None
    else:
        if epsilon is None or epsilon <= 0:
            raise ValueError("privacy modes need a positive total epsilon")
        budget = DtBudget(epsilon_total=epsilon, depth=depth)

    provider = FederatedCounts(session, len(schema.class_values))
    builder = _TreeBuilder(provider, schema, budget, ledger=session.ledger)
    root = builder.build([], list(range(len(schema.feature_names))), depth, 0)
    if budget is not None:
        assert session.ledger.total_epsilon <= epsilon + 1e-9
    return TreeModel(
        root=root,
        feature_names=tuple(schema.feature_names),
        feature_values=tuple(tuple(v) for v in schema.feature_values),
        class_values=tuple(schema.class_values),
        depth_bound=depth,
    )


def centralized_id3(dataset, depth: Optional[int] = None) -> TreeModel:
    """Exact, non-private ID3 on one dataset; the equivalence oracle."""
    if depth is None:
        depth = len(dataset.feature_names) // 2
    provider = DirectCounts(dataset)
    builder = _TreeBuilder(provider, dataset, budget=None)
    root = builder.build([], list(range(dataset.n_features)), depth, 0)
    return TreeModel(
        root=root,
        feature_names=tuple(dataset.feature_names),
        feature_values=tuple(tuple(v) for v in dataset.feature_values),
        class_values=tuple(dataset.class_values),
        depth_bound=depth,
    )


def dt_predict(model: TreeModel, row) -> int:
    """Walk edges by feature value; unseen values fall back to the node
    majority label."""
    node = model.root
    while not node.is_leaf:
        value = int(row[node.feature])
        child = node.children.get(value)
        if child is None:
            return node.label
        node = child
    return node.label


def dt_predict_batch(model: TreeModel, rows) -> np.ndarray:
    return np.array([dt_predict(model, row) for row in rows], dtype=np.int64)


def trees_equal(a: TreeNode, b: TreeNode) -> bool:
    """Structural identity: same splits, same labels, same shape."""
    if a.is_leaf != b.is_leaf or a.label != b.label or a.feature != b.feature:
        return False
    if set(a.children) != set(b.children):
        return False
    return all(trees_equal(a.children[v], b.children[v]) for v in a.children)


def tree_depth(node: TreeNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(c) for c in node.children.values())


def paths_feature_unique(node: TreeNode, seen=()) -> bool:
    """No feature repeats on any root-to-leaf path."""
    if node.is_leaf:
        return True
    if node.feature in seen:
        return False
    return all(
        paths_feature_unique(c, seen + (node.feature,))
        for c in node.children.values()
    )
