import math

import numpy as np
import pytest

from hybridfl.data import CategoricalDataset, partition, synth_categorical
from hybridfl.federation import SessionConfig, build_in_proc_session
from hybridfl.trainers.dt import (
    DtBudget,
    centralized_id3,
    dt_predict,
    dt_predict_batch,
    dt_train,
    paths_feature_unique,
    split_score,
    tree_depth,
    trees_equal,
)
from oracles import plain_trees_equal, textbook_id3, tree_to_plain


def separable_dataset():
    """One feature fully determines the class."""
    rows = np.array([[0, 1], [0, 0], [1, 1], [1, 0], [2, 1], [2, 0]] * 10)
    labels = rows[:, 0].copy()
    return CategoricalDataset(
        feature_names=("key", "junk"),
        feature_values=(("a", "b", "c"), ("x", "y")),
        class_values=("c0", "c1", "c2"),
        rows=rows,
        labels=labels,
    )


def federated_session(ds, n_parties, mode, seed=0, **cfg_kw):
    plan = partition(len(ds), n_parties, seed=seed)
    shards = [ds.subset(a) for a in plan.assignments]
    cfg = SessionConfig(
        n_parties=n_parties,
        trust_t=cfg_kw.pop("trust_t", n_parties if mode == "hybrid" else 2),
        mode=mode,
        **cfg_kw,
    )
    return build_in_proc_session(cfg, shards, seed=seed + 1)


class TestBudgetFormulas:
    def test_eps1_eps2(self):
        budget = DtBudget(epsilon_total=0.5, depth=4)
        assert budget.eps1 == pytest.approx(0.05)
        assert budget.eps2(8) == pytest.approx(0.003125)

    def test_stop_threshold_example(self):
        # eps1 = 0.05, f = 5, |C| = 5: halt when N < 25 * sqrt(2)/0.05
        budget = DtBudget(epsilon_total=0.5, depth=4)
        assert 5 * 5 * budget.stop_threshold == pytest.approx(707.1, abs=0.05)


class TestSplitScore:
    def test_hand_value(self):
        # two values, two classes, all cells 2 -> 8 * ln(1/2)
        score = split_score([4.0, 4.0], [[2.0, 2.0], [2.0, 2.0]])
        assert score == pytest.approx(8 * math.log(0.5))

    def test_degenerate_terms_contribute_zero(self):
        assert split_score([0.0, 4.0], [[2.0, 2.0], [0.0, 4.0]]) == pytest.approx(
            4 * math.log(1.0)
        )

    def test_argmax_invariant_to_log_base(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            counts = [
                [float(rng.integers(0, 50)) for _ in range(3)] for _ in range(4)
            ]
            totals = [sum(row) for row in counts]
            candidates = [
                (totals[:2], counts[:2]),
                (totals[2:], counts[2:]),
            ]
            by_ln = np.argmax(
                [split_score(t, c, math.log) for t, c in candidates]
            )
            by_log2 = np.argmax(
                [split_score(t, c, math.log2) for t, c in candidates]
            )
            assert by_ln == by_log2


class TestExactTraining:
    def test_single_feature_perfect_split(self):
        ds = separable_dataset()
        session = federated_session(ds, 3, "none")
        model = dt_train(session, ds, depth=1)
        assert model.root.feature == 0
        preds = dt_predict_batch(model, ds.rows)
        assert (preds == ds.labels).all()

    def test_noise_off_matches_centralized(self):
        ds = synth_categorical(2000, seed=21)
        session = federated_session(ds, 10, "none", seed=4)
        federated = dt_train(session, ds)
        central = centralized_id3(ds)
        assert trees_equal(federated.root, central.root)

    def test_centralized_matches_textbook_oracle(self):
        ds = synth_categorical(800, n_features=5, seed=22)
        central = centralized_id3(ds, depth=2)
        oracle = textbook_id3(ds, depth=2)
        assert plain_trees_equal(tree_to_plain(central.root), oracle)

    def test_path_uniqueness_and_depth(self):
        ds = synth_categorical(1500, seed=23)
        session = federated_session(ds, 5, "none", seed=5)
        model = dt_train(session, ds)
        assert paths_feature_unique(model.root)
        assert tree_depth(model.root) <= model.depth_bound


class TestPrivateTraining:
    def test_budget_never_exceeded(self):
        ds = synth_categorical(1500, seed=24)
        for epsilon in (0.4, 1.0, 2.0):
            session = federated_session(ds, 5, "hybrid", seed=6, key_bits=256)
            dt_train(session, ds, epsilon=epsilon)
            assert session.ledger.total_epsilon <= epsilon + 1e-9

    def test_local_mode_trains(self):
        ds = synth_categorical(1500, seed=25)
        session = federated_session(ds, 5, "local", seed=7)
        model = dt_train(session, ds, epsilon=2.0)
        assert paths_feature_unique(model.root)

    def test_epsilon_required_outside_mode_none(self):
        ds = synth_categorical(200, seed=26)
        session = federated_session(ds, 2, "local", seed=8)
        with pytest.raises(ValueError):
            dt_train(session, ds)

    def test_high_budget_recovers_planted_rule(self):
        ds = synth_categorical(2000, seed=27, label_noise=0.0)
        session = federated_session(ds, 5, "hybrid", seed=9, key_bits=256)
        model = dt_train(session, ds, epsilon=50.0, depth=2)
        preds = dt_predict_batch(model, ds.rows)
        assert (preds == ds.labels).mean() > 0.95


class TestPredict:
    def test_single_leaf_tree(self):
        ds = separable_dataset()
        session = federated_session(ds, 2, "none")
        model = dt_train(session, ds, depth=0)
        assert model.root.is_leaf
        assert all(dt_predict(model, row) == model.root.label for row in ds.rows)

    def test_training_paths_consistent_with_oracle(self):
        ds = synth_categorical(1000, seed=28, label_noise=0.0)
        session = federated_session(ds, 4, "none", seed=10)
        model = dt_train(session, ds, depth=2)
        central = centralized_id3(ds, depth=2)
        assert np.array_equal(
            dt_predict_batch(model, ds.rows), dt_predict_batch(central, ds.rows)
        )

    def test_unseen_value_falls_back_to_majority(self):
        ds = separable_dataset()
        session = federated_session(ds, 2, "none")
        model = dt_train(session, ds, depth=1)
        model.root.children.pop(2)  # simulate a value never seen in training
        row = np.array([2, 0])
        assert dt_predict(model, row) == model.root.label
