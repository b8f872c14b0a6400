"""Independent brute-force oracles used only by the test suite."""

import math

import numpy as np


def entropy_of(labels, n_classes):
    counts = np.bincount(labels, minlength=n_classes)
    total = counts.sum()
    if total == 0:
        return 0.0
    probs = counts / total
    return -sum(p * math.log2(p) for p in probs if p > 0)


def information_gain(rows, labels, feature, n_values, n_classes):
    parent = entropy_of(labels, n_classes)
    weighted = 0.0
    for v in range(n_values):
        mask = rows[:, feature] == v
        if mask.sum() == 0:
            continue
        weighted += mask.sum() / len(rows) * entropy_of(labels[mask], n_classes)
    return parent - weighted


def textbook_id3(dataset, depth):
    """Plain ID3 with information gain; lowest-index tie-breaks.

    Returns nested dicts {"label": int, "feature": int|None, "children": {}}
    mirroring the production tree shape, for structural comparison.
    """

    def majority(labels):
        counts = np.bincount(labels, minlength=dataset.n_classes)
        return int(np.argmax(counts))

    def build(rows, labels, features, d):
        node = {"label": majority(labels), "feature": None, "children": {}}
        if not features or d == 0 or len(rows) < 1:
            return node
        gains = [
            information_gain(
                rows, labels, f, len(dataset.feature_values[f]), dataset.n_classes
            )
            for f in features
        ]
        best = features[int(np.argmax(gains))]
        node["feature"] = best
        for v in range(len(dataset.feature_values[best])):
            mask = rows[:, best] == v
            node["children"][v] = build(
                rows[mask], labels[mask], [f for f in features if f != best], d - 1
            )
        return node

    return build(
        dataset.rows, dataset.labels, list(range(dataset.n_features)), depth
    )


def tree_to_plain(node):
    """Production TreeNode -> the oracle's nested-dict shape."""
    return {
        "label": node.label,
        "feature": node.feature,
        "children": {v: tree_to_plain(c) for v, c in node.children.items()},
    }


def plain_trees_equal(a, b):
    if a["feature"] != b["feature"] or a["label"] != b["label"]:
        return False
    if set(a["children"]) != set(b["children"]):
        return False
    return all(
        plain_trees_equal(a["children"][v], b["children"][v]) for v in a["children"]
    )


def finite_difference_gradient(loss_fn, params, indices, h=1e-6):
    """Central finite differences of a scalar loss at selected indices."""
    grads = {}
    for idx in indices:
        bumped = params.copy()
        bumped[idx] += h
        up = loss_fn(bumped)
        bumped[idx] -= 2 * h
        down = loss_fn(bumped)
        grads[idx] = (up - down) / (2 * h)
    return grads
