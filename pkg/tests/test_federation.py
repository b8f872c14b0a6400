import json

import numpy as np
import pytest

from hybridfl.data import partition, synth_categorical
from hybridfl.dpcore import PrivacyParams
from hybridfl.federation import (
    ArityMismatchError,
    MixedQueryIdsError,
    SessionConfig,
    aggregate_encrypted,
    build_in_proc_session,
)
from hybridfl.federation.aggregator import PartyFailureError
from hybridfl.federation.messages import (
    KIND_CLASS_COUNTS,
    KIND_COUNTS,
    QueryResponse,
)
from hybridfl.federation.party import Party
from hybridfl.thpaillier import encrypt


def make_shards(n_rows, n_parties, seed=0):
    ds = synth_categorical(n_rows, seed=seed)
    plan = partition(len(ds), n_parties, seed=seed + 1)
    return ds, [ds.subset(a) for a in plan.assignments]


def single_value_shards(values, template):
    """One shard per party whose total row count is the given value."""
    shards = []
    for v in values:
        idx = np.arange(v)
        shards.append(template.subset(idx % len(template)))
    return shards


class TestRunRound:
    def test_counts_sum_exact_with_noise_off(self):
        ds, _ = make_shards(60, 3)
        shards = single_value_shards([1, 2, 3], ds)
        cfg = SessionConfig(n_parties=3, trust_t=2, mode="hybrid", key_bits=256)
        session = build_in_proc_session(cfg, shards, seed=1)
        assert session.run_query(KIND_COUNTS, {"splits": []}) == [6.0]

    def test_decryptor_set_size(self):
        ds, shards = make_shards(100, 5)
        cfg = SessionConfig(n_parties=5, trust_t=3, mode="hybrid", key_bits=256)
        session = build_in_proc_session(cfg, shards, seed=2)
        session.run_query(KIND_COUNTS, {"splits": []})
        transcript = session.transcripts[-1]
        assert cfg.threshold == 3
        assert len(transcript.decryptor_set) == 3

    def test_vector_query_elementwise(self):
        # class counts act as the length-|C| vector query
        ds, shards = make_shards(200, 4)
        cfg = SessionConfig(n_parties=4, trust_t=4, mode="hybrid", key_bits=256)
        session = build_in_proc_session(cfg, shards, seed=3)
        got = session.run_query(
            KIND_CLASS_COUNTS, {"splits": []}, response_length=ds.n_classes
        )
        expected = np.bincount(ds.labels, minlength=ds.n_classes)
        assert got == [float(c) for c in expected]

    def test_modes_bypass_encryption(self):
        ds, shards = make_shards(90, 3)
        for mode in ("local", "none"):
            cfg = SessionConfig(n_parties=3, trust_t=2, mode=mode)
            session = build_in_proc_session(cfg, shards, seed=4)
            got = session.run_query(KIND_COUNTS, {"splits": []})
            assert got == [90.0]
            assert session.transcripts[-1].aggregated is None

    def test_empty_shard_counts_zero(self):
        ds, _ = make_shards(30, 3)
        shards = single_value_shards([0, 0, 0], ds)
        cfg = SessionConfig(n_parties=3, trust_t=2, mode="hybrid", key_bits=256)
        session = build_in_proc_session(cfg, shards, seed=5)
        assert session.run_query(KIND_COUNTS, {"splits": []}) == [0.0]

    def test_hybrid_noise_has_laplace_scale(self):
        # t=2 degenerates to full per-party Laplace noise
        ds, shards = make_shards(100, 2)
        cfg = SessionConfig(n_parties=2, trust_t=2, mode="hybrid", key_bits=256)
        session = build_in_proc_session(cfg, shards, seed=6)
        privacy = PrivacyParams(epsilon=0.5, sensitivity=1.0, trust_t=2, n_parties=2)
        draws = [
            session.run_query(KIND_COUNTS, {"splits": []}, privacy)[0] - 100.0
            for _ in range(400)
        ]
        # aggregate of 2 parties at t=2: variance 2 * 2/eps^2 = 16
        assert np.var(draws) == pytest.approx(16.0, rel=0.35)


class TestAggregateEncrypted:
    def test_single_response_passthrough(self, small_key_1of10, rng):
        pk, _ = small_key_1of10
        body = [encrypt(pk, 5, rng)]
        out = aggregate_encrypted([QueryResponse(1, 1, body)], pk)
        assert out == body

    def test_two_responses_sum(self, small_key_1of10, rng):
        pk, shares = small_key_1of10
        from hybridfl.thpaillier import combine, partial_decrypt

        r1 = QueryResponse(1, 1, [encrypt(pk, 5, rng)])
        r2 = QueryResponse(1, 2, [encrypt(pk, 7, rng)])
        (folded,) = aggregate_encrypted([r1, r2], pk)
        assert combine(pk, [partial_decrypt(shares[0], folded)]) == 12

    def test_unit_counts_oracle(self, small_key_1of10, rng):
        pk, shares = small_key_1of10
        from hybridfl.thpaillier import combine, partial_decrypt

        responses = [
            QueryResponse(1, i + 1, [encrypt(pk, 1, rng)]) for i in range(10)
        ]
        (folded,) = aggregate_encrypted(responses, pk)
        assert combine(pk, [partial_decrypt(shares[0], folded)]) == 10

    def test_arity_mismatch(self, small_key_1of10, rng):
        pk, _ = small_key_1of10
        r1 = QueryResponse(1, 1, [encrypt(pk, 1, rng)])
        r2 = QueryResponse(1, 2, [encrypt(pk, 1, rng), encrypt(pk, 2, rng)])
        with pytest.raises(ArityMismatchError):
            aggregate_encrypted([r1, r2], pk)

    def test_mixed_query_ids(self, small_key_1of10, rng):
        pk, _ = small_key_1of10
        r1 = QueryResponse(1, 1, [encrypt(pk, 1, rng)])
        r2 = QueryResponse(2, 2, [encrypt(pk, 1, rng)])
        with pytest.raises(MixedQueryIdsError):
            aggregate_encrypted([r1, r2], pk)


class TestPartyHandling:
    def test_unknown_kind_fails_round(self):
        ds, shards = make_shards(30, 3)
        cfg = SessionConfig(n_parties=3, trust_t=2, mode="none")
        session = build_in_proc_session(cfg, shards, seed=7)
        with pytest.raises(PartyFailureError, match="UnknownQueryKind"):
            session.run_query("bogus_kind", {})

    def test_budget_guard(self):
        ds, shards = make_shards(30, 1)
        cfg = SessionConfig(n_parties=1, trust_t=2, mode="local")
        party = Party(1, cfg, dataset=shards[0], noise_seed=1, budget_limit=0.5)
        from hybridfl.federation.messages import Query, query_to_envelope

        privacy = PrivacyParams(epsilon=0.4, sensitivity=1.0)
        q1 = query_to_envelope("s", Query(1, KIND_COUNTS, {"splits": []}, privacy))
        assert party.handle_envelope(q1)["status"] == "ok"
        q2 = query_to_envelope("s", Query(2, KIND_COUNTS, {"splits": []}, privacy))
        failed = party.handle_envelope(q2)
        assert failed["status"] == "error"
        assert failed["error_type"] == "BudgetExhaustedError"

    def test_mode_none_is_exact_statistic(self):
        ds, shards = make_shards(50, 1)
        cfg = SessionConfig(n_parties=1, trust_t=2, mode="none")
        session = build_in_proc_session(cfg, shards, seed=8)
        privacy = PrivacyParams(epsilon=0.1, sensitivity=1.0)
        assert session.run_query(KIND_COUNTS, {"splits": []}, privacy) == [50.0]


class TestStructuralInvariants:
    def test_aggregator_blindness_in_transcripts(self):
        ds, shards = make_shards(120, 4)
        cfg = SessionConfig(n_parties=4, trust_t=4, mode="hybrid", key_bits=256)
        session = build_in_proc_session(cfg, shards, seed=9, record_bodies=True)
        privacy = PrivacyParams(epsilon=1.0, sensitivity=1.0, trust_t=4, n_parties=4)
        session.run_query(KIND_COUNTS, {"splits": []}, privacy)
        shard_counts = {float(len(s)) for s in shards}
        for transcript in session.transcripts:
            blob = json.dumps(transcript.to_dict())
            record = json.loads(blob)
            # per-party material is a status string only
            for status in record["response_status"].values():
                assert status == "ok"
            # no per-party plaintext statistic anywhere in the transcript
            for value in (record["plaintexts"] or []):
                assert value not in shard_counts

    def test_per_party_work_independent_of_n(self):
        ds = synth_categorical(400, seed=11)
        encryption_counts = {}
        for n in (2, 4, 8):
            plan = partition(len(ds), n, seed=12)
            shards = [ds.subset(a) for a in plan.assignments]
            cfg = SessionConfig(n_parties=n, trust_t=n, mode="hybrid", key_bits=256)
            session = build_in_proc_session(cfg, shards, seed=13)
            session.run_query(KIND_COUNTS, {"splits": []})
            session.run_query(
                KIND_CLASS_COUNTS, {"splits": []}, response_length=ds.n_classes
            )
            per_party = {p.stats["encryptions"] for p in session.parties}
            assert len(per_party) == 1  # identical across parties
            encryption_counts[n] = per_party.pop()
        assert len(set(encryption_counts.values())) == 1

    def test_quorum_required_for_decryption(self):
        # decryption succeeds iff >= threshold distinct partials collected
        from hybridfl.thpaillier import (
            InsufficientSharesError,
            combine,
            deal_keys,
            encrypt,
            partial_decrypt,
        )
        import random

        pk, shares = deal_keys(256, 4, 3, rng_seed=77)
        c = encrypt(pk, 9, random.Random(1))
        parts = [partial_decrypt(s, c) for s in shares[:3]]
        assert combine(pk, parts) == 9
        with pytest.raises(InsufficientSharesError):
            combine(pk, parts[:2])
