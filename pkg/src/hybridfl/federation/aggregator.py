"""Aggregator-side session: the protocol's round loop.

A round broadcasts one query to all data parties, folds the encrypted
responses element-wise, picks a decryption quorum of size n - t + 1,
runs a partial-decryption round against only that quorum, combines the
partials, and decodes the plaintext vector. In ``local``/``central``/
``none`` modes the encryption layer is bypassed and responses are summed
as fixed-point integers, leaving the numeric path otherwise identical.
"""

from __future__ import annotations

import json
import random
import time
from pathlib import Path
from typing import Optional

import numpy as np

from hybridfl.dpcore import BudgetLedger, PrivacyParams
from hybridfl.federation import messages as msg
from hybridfl.federation import transport
from hybridfl.federation.party import Party
from hybridfl.thpaillier import (
    Ciphertext,
    PublicKey,
    VectorCodec,
    add,
    ciphertext_to_bytes,
    combine,
    deal_keys,
)


class ArityMismatchError(ValueError):
    """Responses of unequal or undeclared length."""


class MixedQueryIdsError(ValueError):
    """Responses answering different queries."""


class PartyFailureError(RuntimeError):
    """A party answered with an error envelope; the round aborts."""


def aggregate_encrypted(
    responses: list[msg.QueryResponse], pk: PublicKey
) -> list[Ciphertext]:
    """Element-wise homomorphic sum of equal-arity response vectors."""
    if not responses:
        raise ValueError("nothing to aggregate")
    ids = {r.query_id for r in responses}
    if len(ids) != 1:
        raise MixedQueryIdsError(f"responses span query ids {sorted(ids)}")
    arity = len(responses[0].body)
    folded = list(responses[0].body)
    for r in responses[1:]:
        if len(r.body) != arity:
            raise ArityMismatchError(
                f"party {r.party_index} sent {len(r.body)} elements, "
                f"expected {arity}"
            )
        folded = [add(pk, a, b) for a, b in zip(folded, r.body)]
    return folded


class Session:
    """Drives rounds over a fixed set of party channels.

    Rounds are strictly sequential; within a round the data queries go
    out to all parties (concurrently on transports that support it).
    """

    def __init__(
        self,
        config: msg.SessionConfig,
        channels,
        pk: Optional[PublicKey] = None,
        session_id: str = "session",
        parties: Optional[list[Party]] = None,
        record_bodies: bool = False,
        checkpoint_dir: str | Path | None = None,
    ) -> None:
        if config.encrypted and pk is None:
            raise ValueError("hybrid mode requires a public key")
        self.config = config
        self.channels = list(channels)
        self.pk = pk
        self.session_id = session_id
        self.parties = parties
        self.record_bodies = record_bodies
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.ledger = BudgetLedger()
        self.transcripts: list[msg.RoundTranscript] = []
        self._query_counter = 0
        self._round_counter = 0
        if config.encrypted:
            self.codec = VectorCodec(
                modulus_bits=pk.n.bit_length(),
                frac_bits=config.frac_bits,
                int_bits=config.int_bits,
                n_summands=config.n_parties,
            )
        else:
            self.codec = None

    def next_query(
        self,
        kind: str,
        payload: dict,
        privacy: Optional[PrivacyParams] = None,
        response_length: int = 1,
    ) -> msg.Query:
        self._query_counter += 1
        return msg.Query(
            query_id=self._query_counter,
            kind=kind,
            payload=payload,
            privacy=privacy,
            response_length=response_length,
        )

    def run_query(
        self,
        kind: str,
        payload: dict,
        privacy: Optional[PrivacyParams] = None,
        response_length: int = 1,
    ) -> list[float]:
        """Convenience: build, run, and return the decrypted aggregate."""
        query = self.next_query(kind, payload, privacy, response_length)
        return self.run_round(query).plaintexts

    # -- the round ----------------------------------------------------------

    def run_round(self, query: msg.Query) -> msg.RoundTranscript:
        self._round_counter += 1
        frame = msg.encode_envelope(msg.query_to_envelope(self.session_id, query))
        status: dict[int, str] = {}

        t0 = time.perf_counter()
        raw = transport.request_all(self.channels, frame, self.config.timeout_s)
        responses: list[msg.QueryResponse] = []
        for channel, item in zip(self.channels, raw):
            idx = channel.party_index
            if isinstance(item, Exception):
                status[idx] = f"error:{type(item).__name__}"
                raise transport.RoundTimeoutError(
                    f"party {idx} unresponsive: {item}"
                ) from item
            env = msg.decode_envelope(item)
            if env.get("status") != "ok":
                status[idx] = f"error:{env.get('error_type')}"
                raise PartyFailureError(
                    f"party {idx} failed query {query.query_id}: "
                    f"{env.get('error_type')}: {env.get('error')}"
                )
            status[idx] = "ok"
            responses.append(msg.response_from_envelope(env))

        compute_ms = max(r.timings.get("compute_ms", 0.0) for r in responses)
        encrypt_ms = max(r.timings.get("encrypt_ms", 0.0) for r in responses)

        if query.kind == msg.KIND_ECHO:
            # transport contract check: opaque payload, no aggregation
            transcript = msg.RoundTranscript(
                query_id=query.query_id,
                kind=query.kind,
                response_status=status,
                aggregated=None,
                decryptor_set=(),
                plaintexts=list(responses[0].body),
                timings={"compute_ms": compute_ms, "encrypt_ms": encrypt_ms,
                         "aggregate_ms": 0.0, "decrypt_ms": 0.0,
                         "round_ms": (time.perf_counter() - t0) * 1e3},
            )
            self._record(transcript)
            return transcript

        self._check_shape(query, responses)
        if self.config.encrypted:
            t1 = time.perf_counter()
            folded = aggregate_encrypted(responses, self.pk)
            aggregate_ms = (time.perf_counter() - t1) * 1e3

            t2 = time.perf_counter()
            quorum = self._select_decryptors()
            packed = self._decrypt_round(folded, quorum, status)
            plaintexts = self.codec.decode_vector(
                packed, query.response_length, n_summands=self.config.n_parties
            )
            decrypt_ms = (time.perf_counter() - t2) * 1e3
            aggregated = [c.value for c in folded]
            decryptors = [self.channels[i].party_index for i in quorum]
        else:
            t1 = time.perf_counter()
            sums = [0] * len(responses[0].body)
            for r in responses:
                for i, v in enumerate(r.body):
                    sums[i] += int(v)
            scale = 1 << self.config.frac_bits
            plaintexts = [s / scale for s in sums]
            aggregate_ms = (time.perf_counter() - t1) * 1e3
            decryptors = ()
            decrypt_ms = 0.0
            aggregated = None

        transcript = msg.RoundTranscript(
            query_id=query.query_id,
            kind=query.kind,
            response_status=status,
            aggregated=aggregated,
            decryptor_set=tuple(decryptors),
            plaintexts=plaintexts,
            timings={
                "compute_ms": compute_ms,
                "encrypt_ms": encrypt_ms,
                "aggregate_ms": aggregate_ms,
                "decrypt_ms": decrypt_ms,
                "round_ms": (time.perf_counter() - t0) * 1e3,
            },
        )
        self._record(transcript)
        return transcript

    def _check_shape(self, query: msg.Query, responses) -> None:
        if self.config.encrypted:
            expected = self.codec.ciphertext_count(query.response_length)
        else:
            expected = query.response_length
        for r in responses:
            if r.query_id != query.query_id:
                raise MixedQueryIdsError(
                    f"party {r.party_index} answered query {r.query_id}, "
                    f"expected {query.query_id}"
                )
            if len(r.body) != expected:
                raise ArityMismatchError(
                    f"party {r.party_index} sent {len(r.body)} elements, "
                    f"declared arity is {expected}"
                )

    def _select_decryptors(self) -> list[int]:
        """First-responder quorum; round-robin rotation breaks ties in-proc."""
        n = self.config.n_parties
        offset = self._round_counter % n
        order = [(i + offset) % n for i in range(n)]
        return sorted(order[: self.config.threshold])

    def _decrypt_round(self, folded, decryptors, status) -> list[int]:
        """A partial_decrypt round addressed only to the quorum."""
        payload = {
            "ciphertexts": [
                msg.b64encode_bytes(ciphertext_to_bytes(c)) for c in folded
            ]
        }
        query = self.next_query(msg.KIND_PARTIAL_DECRYPT, payload)
        frame = msg.encode_envelope(msg.query_to_envelope(self.session_id, query))
        quorum_channels = [self.channels[i] for i in decryptors]
        raw = transport.request_all(quorum_channels, frame, self.config.timeout_s)

        partials_by_element: list[list] = [[] for _ in folded]
        for channel, item in zip(quorum_channels, raw):
            idx = channel.party_index
            if isinstance(item, Exception):
                status[idx] = f"error:{type(item).__name__}"
                raise transport.RoundTimeoutError(
                    f"decryptor {idx} unresponsive: {item}"
                ) from item
            env = msg.decode_envelope(item)
            if env.get("status") != "ok":
                raise PartyFailureError(
                    f"decryptor {idx} failed: {env.get('error')}"
                )
            response = msg.response_from_envelope(env)
            for i, part in enumerate(response.body):
                partials_by_element[i].append(part)
        return [combine(self.pk, parts) for parts in partials_by_element]

    def _record(self, transcript: msg.RoundTranscript) -> None:
        if self.record_bodies:
            self.transcripts.append(transcript)
        else:
            self.transcripts.append(
                msg.RoundTranscript(
                    query_id=transcript.query_id,
                    kind=transcript.kind,
                    response_status=transcript.response_status,
                    aggregated=None,
                    decryptor_set=transcript.decryptor_set,
                    plaintexts=None,
                    timings=transcript.timings,
                )
            )

    # -- bookkeeping ----------------------------------------------------------

    def timing_totals(self) -> dict[str, float]:
        totals = {"compute_ms": 0.0, "encrypt_ms": 0.0, "aggregate_ms": 0.0,
                  "decrypt_ms": 0.0}
        for t in self.transcripts:
            for key in totals:
                totals[key] += t.timings.get(key, 0.0)
        return totals

    def save_checkpoint(self, state: dict) -> None:
        if self.checkpoint_dir is None:
            return
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        path = self.checkpoint_dir / f"round_{self._round_counter:06d}.json"
        blob = {
            "session": self.session_id,
            "round": self._round_counter,
            "ledger": self.ledger.report(),
            "state": state,
        }
        path.write_text(json.dumps(blob), encoding="utf-8")


def build_in_proc_session(
    config: msg.SessionConfig,
    shards: list,
    seed: int = 0,
    session_id: str = "session",
    record_bodies: bool = False,
    checkpoint_dir=None,
) -> Session:
    """Deal keys, spin up in-process parties, and wire a session together."""
    if len(shards) != config.n_parties:
        raise ValueError("one shard per party required")
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(config.n_parties + 1)

    pk = None
    shares: list = [None] * config.n_parties
    if config.encrypted:
        key_seed = int(children[-1].generate_state(2, dtype=np.uint64)[0])
        pk, shares = deal_keys(
            config.key_bits, config.n_parties, config.threshold, rng_seed=key_seed
        )

    parties = []
    for i in range(config.n_parties):
        crypto_seed = int(children[i].generate_state(2, dtype=np.uint64)[1])
        parties.append(
            Party(
                index=i + 1,
                config=config,
                dataset=shards[i],
                key_share=shares[i],
                noise_seed=children[i],
                crypto_rng=random.Random(crypto_seed),
                session_id=session_id,
            )
        )
    channels = transport.in_proc_transport(parties)
    return Session(
        config,
        channels,
        pk=pk,
        session_id=session_id,
        parties=parties,
        record_bodies=record_bodies,
        checkpoint_dir=checkpoint_dir,
    )
