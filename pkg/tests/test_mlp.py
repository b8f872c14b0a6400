import math

import numpy as np
import pytest

from hybridfl.data import partition, synth_multiclass
from hybridfl.federation import SessionConfig, build_in_proc_session
from hybridfl.trainers import federated
from hybridfl.trainers.mlp import (
    MlpHyper,
    MlpModel,
    clipped_gradient_sum,
    forward,
    gradients,
    local_train_epoch,
    loss_and_probs,
    param_count,
    predict,
)
from oracles import finite_difference_gradient


def tiny_model(seed=0, sizes=(6, 5, 4, 3)):
    rng = np.random.default_rng(seed)
    model = MlpModel.init_random(list(sizes), rng)
    # non-zero biases keep pre-activations off the ReLU kink, where
    # finite differences are meaningless
    for b in model.biases:
        b += rng.normal(0.1, 0.05, size=b.shape)
    return model


def tiny_batch(model, n=8, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, model.layer_sizes[0]))
    y = rng.integers(0, model.layer_sizes[-1], size=n)
    return X, y


class TestForwardLoss:
    def test_uniform_logits_loss_ln10(self):
        sizes = [4, 3, 10]
        model = MlpModel(
            sizes,
            [np.zeros((4, 3)), np.zeros((3, 10))],
            [np.zeros(3), np.zeros(10)],
        )
        X = np.zeros((5, 4))
        y = np.zeros(5, dtype=np.int64)
        loss, probs, _ = loss_and_probs(model, X, y)
        assert loss == pytest.approx(math.log(10))
        assert np.allclose(probs, 0.1)

    def test_zero_weights_zero_input_logits_equal(self):
        model = tiny_model()
        for w in model.weights:
            w[:] = 0
        for b in model.biases:
            b[:] = 0
        logits, _ = forward(model, np.zeros((3, model.layer_sizes[0])))
        assert np.allclose(logits, logits[:, :1])

    def test_vector_roundtrip(self):
        model = tiny_model(3)
        vec = model.to_vector()
        assert vec.shape == (param_count(model.layer_sizes),)
        again = MlpModel.from_vector(model.layer_sizes, vec)
        for a, b in zip(model.weights, again.weights):
            assert np.array_equal(a, b)


class TestGradients:
    def test_matches_finite_differences(self):
        model = tiny_model(7)
        X, y = tiny_batch(model, n=6, seed=8)
        gw, gb = gradients(model, X, y)
        flat_grad = MlpModel(model.layer_sizes, gw, gb).to_vector()
        params = model.to_vector()

        def loss_fn(p):
            return loss_and_probs(
                MlpModel.from_vector(model.layer_sizes, p), X, y
            )[0]

        rng = np.random.default_rng(9)
        indices = rng.choice(len(params), size=20, replace=False)
        fd = finite_difference_gradient(loss_fn, params, indices)
        for idx, val in fd.items():
            assert abs(flat_grad[idx] - val) <= 1e-5 * max(1.0, abs(val))


class TestClipping:
    def test_norm_8_clipped_to_4(self):
        # a single example whose gradient norm exceeds the clip bound
        model = tiny_model(11)
        X, y = tiny_batch(model, n=1, seed=12)
        X *= 40.0  # inflate activations, hence the gradient norm
        gw_raw, gb_raw = gradients(model, X, y)
        raw = MlpModel(model.layer_sizes, gw_raw, gb_raw).to_vector()
        norm = np.linalg.norm(raw)
        assert norm > 4.0
        gw, gb = clipped_gradient_sum(model, X, y, clip=4.0)
        clipped = MlpModel(model.layer_sizes, gw, gb).to_vector()
        assert np.linalg.norm(clipped) == pytest.approx(4.0, rel=1e-9)
        assert np.allclose(clipped, raw * (4.0 / norm))

    def test_small_gradient_unchanged(self):
        model = tiny_model(13)
        X, y = tiny_batch(model, n=1, seed=14)
        X *= 0.01
        gw_raw, gb_raw = gradients(model, X, y)
        raw = MlpModel(model.layer_sizes, gw_raw, gb_raw).to_vector()
        assert np.linalg.norm(raw) < 4.0
        gw, gb = clipped_gradient_sum(model, X, y, clip=4.0)
        clipped = MlpModel(model.layer_sizes, gw, gb).to_vector()
        assert np.allclose(clipped, raw)

    def test_every_example_within_bound(self):
        model = tiny_model(15)
        c = 0.5
        X, y = tiny_batch(model, n=16, seed=16)
        gw, gb = clipped_gradient_sum(model, X, y, clip=c)
        total = MlpModel(model.layer_sizes, gw, gb).to_vector()
        # each per-example contribution has norm <= c, so the sum of 16 does
        assert np.linalg.norm(total) <= 16 * c + 1e-9


class TestLocalEpoch:
    def test_noise_free_full_batch_equals_sgd_step(self):
        model = tiny_model(17)
        X, y = tiny_batch(model, n=12, seed=18)
        X *= 0.01  # keep per-example norms below the clip
        hyper = MlpHyper(clip=1e6, sigma=0.0, lr=0.1, batch_rate=1.0, epochs=1)
        rng = np.random.default_rng(19)
        updated = local_train_epoch(
            X, y, model.layer_sizes, model.to_vector(), hyper, 0.0, rng
        )
        gw, gb = gradients(model, X, y)
        expected = model.to_vector() - 0.1 * MlpModel(
            model.layer_sizes, gw, gb
        ).to_vector()
        assert np.allclose(updated, expected, atol=1e-12)

    def test_noise_changes_result_deterministically(self):
        model = tiny_model(20)
        X, y = tiny_batch(model, n=12, seed=21)
        hyper = MlpHyper(clip=4.0, sigma=8.0, lr=0.1, batch_rate=0.5, epochs=1)
        a = local_train_epoch(
            X, y, model.layer_sizes, model.to_vector(), hyper, 32.0,
            np.random.default_rng(22),
        )
        b = local_train_epoch(
            X, y, model.layer_sizes, model.to_vector(), hyper, 32.0,
            np.random.default_rng(22),
        )
        assert np.array_equal(a, b)


class TestFederatedAggregation:
    def build(self, n_parties, mode, seed, sizes=(6, 5, 4)):
        ds = synth_multiclass(40 * n_parties, dim=sizes[0], n_classes=sizes[-1],
                              center_scale=2.0, seed=seed)
        plan = partition(len(ds), n_parties, seed=seed + 1)
        shards = [ds.subset(a) for a in plan.assignments]
        cfg = SessionConfig(
            n_parties=n_parties,
            trust_t=n_parties if mode == "hybrid" else 2,
            mode=mode,
            key_bits=256,
            frac_bits=20,
            int_bits=10,
        )
        return build_in_proc_session(cfg, shards, seed=seed + 2), sizes

    def test_single_party_average_is_identity(self):
        session, sizes = self.build(1, "none", 30)
        hyper = MlpHyper(clip=4.0, sigma=0.0, lr=0.05, batch_rate=1.0, epochs=1)
        model = federated.mlp_train(session, list(sizes), hyper, init_seed=31)
        # reproduce the party's own update locally
        party = session.parties[0]
        rng = np.random.default_rng(np.random.SeedSequence(31))
        init = MlpModel.init_random(list(sizes), rng)
        expected = local_train_epoch(
            party.dataset.X, party.dataset.y, list(sizes),
            init.to_vector(), hyper, 0.0, np.random.default_rng(99),
        )
        got = model.to_vector()
        # quantization through the fixed-point path only
        assert np.allclose(got, expected, atol=2 ** -19)

    def test_symmetric_updates_cancel(self):
        # two parties returning theta and -theta average to zero
        from hybridfl.federation.messages import QueryResponse

        vec = np.array([0.5, -1.25, 3.0])
        total = vec + (-vec)
        assert np.allclose(total / 2, 0.0)

    def test_hybrid_average_of_constant_vectors(self):
        # three parties with constant vectors 1, 2, 3 -> element-wise 2.0
        from hybridfl.federation.messages import KIND_ECHO  # noqa: F401
        from hybridfl.thpaillier import VectorCodec

        codec = VectorCodec(modulus_bits=256, frac_bits=32, int_bits=8,
                            n_summands=3)
        rows = [[1.0] * 5, [2.0] * 5, [3.0] * 5]
        packed = [codec.encode_vector(r) for r in rows]
        summed = [sum(col) for col in zip(*packed)]
        avg = [v / 3 for v in codec.decode_vector(summed, 5, n_summands=3)]
        assert avg == pytest.approx([2.0] * 5, abs=3 * 2 ** -32)

    def test_hybrid_noise_free_round_matches_plaintext_mode(self):
        hyper = MlpHyper(clip=1e6, sigma=0.0, lr=0.05, batch_rate=1.0, epochs=2)
        session_h, sizes = self.build(3, "hybrid", 40)
        session_p, _ = self.build(3, "none", 40)
        m_h = federated.mlp_train(session_h, list(sizes), hyper, init_seed=41)
        m_p = federated.mlp_train(session_p, list(sizes), hyper, init_seed=41)
        assert np.allclose(
            m_h.to_vector(), m_p.to_vector(), atol=3 * 2 ** -18
        )

    def test_learns_separable_blobs(self):
        session, sizes = self.build(2, "none", 50)
        hyper = MlpHyper(clip=1e6, sigma=0.0, lr=0.1, batch_rate=0.25, epochs=30)
        model = federated.mlp_train(session, list(sizes), hyper, init_seed=51)
        ds = synth_multiclass(
            200, dim=sizes[0], n_classes=sizes[-1], center_scale=2.0, seed=50
        )
        acc = (predict(model, ds.X) == ds.y).mean()
        assert acc > 0.8
