import numpy as np
import pytest

from hybridfl.data import synth_categorical, synth_linear
from hybridfl.metrics import accuracy, macro_f1, micro_f1
from hybridfl.trainers.baselines import (
    random_guess,
    random_guess_expected_accuracy,
    uniform_guess,
)
from hybridfl.trainers.dt import centralized_id3, dt_predict_batch
from hybridfl.trainers.mlp import MlpModel
from hybridfl.trainers.models import ModelFormatError, load_model, save_model
from hybridfl.trainers.svm import SvmModel

NURSERY_PRIORS = (0.33333, 0.00015, 0.02531, 0.32917, 0.31204)


class TestBaselines:
    def test_uniform_guess_five_classes(self):
        rng = np.random.default_rng(1)
        y_true = rng.integers(0, 5, size=60_000)
        preds = uniform_guess(5, len(y_true), rng)
        assert accuracy(y_true, preds) == pytest.approx(0.2, abs=0.01)

    def test_random_guess_expected_accuracy_nursery(self):
        # sum of squared priors over the published class distribution
        assert random_guess_expected_accuracy(NURSERY_PRIORS) == pytest.approx(
            0.3175, abs=5e-4
        )

    def test_random_guess_matches_expectation(self):
        rng = np.random.default_rng(2)
        priors = np.array([0.6, 0.3, 0.1])
        train_labels = rng.choice(3, p=priors, size=50_000)
        y_true = rng.choice(3, p=priors, size=50_000)
        preds = random_guess(train_labels, len(y_true), rng)
        expected = random_guess_expected_accuracy(priors)
        assert accuracy(y_true, preds) == pytest.approx(expected, abs=0.01)


class TestMetrics:
    def test_micro_f1_equals_accuracy_multiclass(self):
        rng = np.random.default_rng(3)
        y_true = rng.integers(0, 4, size=500)
        y_pred = rng.integers(0, 4, size=500)
        assert micro_f1(y_true, y_pred) == pytest.approx(accuracy(y_true, y_pred))

    def test_macro_f1_perfect(self):
        y = np.array([0, 1, 2, 0, 1, 2])
        assert macro_f1(y, y) == 1.0


class TestModelContainer:
    def test_tree_roundtrip(self, tmp_path):
        ds = synth_categorical(300, seed=4)
        model = centralized_id3(ds, depth=2)
        path = tmp_path / "tree.hflm"
        save_model(path, model, metadata={"dataset": "synthetic"})
        loaded, meta = load_model(path)
        assert meta["dataset"] == "synthetic"
        assert np.array_equal(
            dt_predict_batch(model, ds.rows), dt_predict_batch(loaded, ds.rows)
        )

    def test_mlp_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        model = MlpModel.init_random([4, 3, 2], rng)
        path = tmp_path / "mlp.hflm"
        save_model(path, model)
        loaded, _ = load_model(path)
        assert np.array_equal(model.to_vector(), loaded.to_vector())

    def test_svm_roundtrip(self, tmp_path):
        ds = synth_linear(50, dim=8, seed=6)
        model = SvmModel(w=np.linspace(-1, 1, 8), lam=1e-4)
        path = tmp_path / "svm.hflm"
        save_model(path, model, metadata={"rows": len(ds)})
        loaded, meta = load_model(path)
        assert np.array_equal(model.w, loaded.w)
        assert meta["rows"] == 50

    def test_bad_container_rejected(self, tmp_path):
        path = tmp_path / "junk.hflm"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ModelFormatError):
            load_model(path)
