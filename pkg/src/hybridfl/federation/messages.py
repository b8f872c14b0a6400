"""Query/response types, session configuration, and the wire envelope.

Wire format: UTF-8 JSON envelopes, length-prefixed by the transport.
Ciphertexts and partial decryptions travel as base64 of their canonical
byte forms; model parameter vectors as base64 little-endian float64.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from hybridfl.dpcore import PrivacyParams
from hybridfl.thpaillier import (
    Ciphertext,
    DeserializeError,
    PartialDecryption,
    ciphertext_from_bytes,
    ciphertext_to_bytes,
)

WIRE_VERSION = 1

KIND_COUNTS = "counts"
KIND_CLASS_COUNTS = "class_counts"
KIND_TRAIN_EPOCH_MLP = "train_epoch_mlp"
KIND_TRAIN_EPOCH_SVM = "train_epoch_svm"
KIND_PARTIAL_DECRYPT = "partial_decrypt"
KIND_ECHO = "echo"

DATA_KINDS = (
    KIND_COUNTS,
    KIND_CLASS_COUNTS,
    KIND_TRAIN_EPOCH_MLP,
    KIND_TRAIN_EPOCH_SVM,
)

MODES = ("hybrid", "local", "central", "none")


@dataclass(frozen=True)
class Query:
    """One aggregator-to-parties request.

    ``response_length`` is the logical vector length of the response
    (counts: 1, class_counts: |C|, train epochs: parameter count).
    """

    query_id: int
    kind: str
    payload: dict
    privacy: Optional[PrivacyParams] = None
    response_length: int = 1


@dataclass(frozen=True)
class QueryResponse:
    query_id: int
    party_index: int
    body: Union[list[Ciphertext], list[PartialDecryption], list[int]]
    timings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SessionConfig:
    """Session-level knobs shared by aggregator and parties.

    The decryption quorum is always derived as n - t + 1, never supplied
    directly: it is exactly the size at which the maximum tolerated
    colluding set (n - t) still falls one share short.
    """

    n_parties: int
    trust_t: int = 2
    algorithm: str = "dt"
    mode: str = "hybrid"
    key_bits: int = 512
    frac_bits: int = 32
    int_bits: int = 16
    timeout_s: float = 30.0
    hyper: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown privacy mode {self.mode!r}")
        if self.n_parties < 1:
            raise ValueError("need at least one party")
        if self.mode == "hybrid" and not 2 <= self.trust_t <= self.n_parties:
            raise ValueError(
                "hybrid mode requires 2 <= trust_t <= n_parties, got "
                f"t={self.trust_t}, n={self.n_parties}"
            )

    @property
    def threshold(self) -> int:
        return self.n_parties - self.trust_t + 1

    @property
    def encrypted(self) -> bool:
        return self.mode == "hybrid"


@dataclass
class RoundTranscript:
    """What one protocol round produced.

    In hybrid mode the only per-party material recorded is a status
    string; bodies the aggregator saw are ciphertexts by construction.
    """

    query_id: int
    kind: str
    response_status: dict[int, str]
    aggregated: Optional[list[int]]
    decryptor_set: tuple[int, ...]
    plaintexts: Optional[list[float]]
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "kind": self.kind,
            "response_status": dict(self.response_status),
            "aggregated": list(self.aggregated) if self.aggregated else None,
            "decryptor_set": list(self.decryptor_set),
            "plaintexts": list(self.plaintexts) if self.plaintexts else None,
            "timings": dict(self.timings),
        }


def b64encode_bytes(buf: bytes) -> str:
    return base64.b64encode(buf).decode("ascii")


def b64decode_bytes(s: str) -> bytes:
    return base64.b64decode(s.encode("ascii"))


def encode_f64(arr: np.ndarray) -> str:
    return b64encode_bytes(np.asarray(arr, dtype="<f8").tobytes())


def decode_f64(s: str) -> np.ndarray:
    return np.frombuffer(b64decode_bytes(s), dtype="<f8").copy()


def privacy_to_dict(p: Optional[PrivacyParams]) -> Optional[dict]:
    if p is None:
        return None
    return {
        "epsilon": p.epsilon,
        "delta": p.delta,
        "sigma": p.sigma,
        "sensitivity": p.sensitivity,
        "trust_t": p.trust_t,
        "n_parties": p.n_parties,
    }


def privacy_from_dict(d: Optional[dict]) -> Optional[PrivacyParams]:
    return None if d is None else PrivacyParams(**d)


def query_to_envelope(session_id: str, q: Query) -> dict:
    return {
        "v": WIRE_VERSION,
        "session": session_id,
        "query_id": q.query_id,
        "kind": q.kind,
        "payload": q.payload,
        "privacy": privacy_to_dict(q.privacy),
        "response_length": q.response_length,
    }


def query_from_envelope(env: dict) -> Query:
    if env.get("v") != WIRE_VERSION:
        raise DeserializeError(f"unsupported wire version {env.get('v')!r}")
    return Query(
        query_id=env["query_id"],
        kind=env["kind"],
        payload=env.get("payload", {}),
        privacy=privacy_from_dict(env.get("privacy")),
        response_length=env.get("response_length", 1),
    )


def response_to_envelope(
    session_id: str, query_id: int, party_index: int, body_kind: str, body, timings
) -> dict:
    if body_kind == "ciphertexts":
        wire_body = [b64encode_bytes(ciphertext_to_bytes(c)) for c in body]
    elif body_kind == "partials":
        wire_body = [
            {"party_index": p.party_index, "value": _int_to_b64(p.value)}
            for p in body
        ]
    elif body_kind in ("plaintext", "raw"):
        wire_body = body
    else:
        raise ValueError(f"unknown body kind {body_kind!r}")
    return {
        "v": WIRE_VERSION,
        "session": session_id,
        "query_id": query_id,
        "party_index": party_index,
        "status": "ok",
        "body_kind": body_kind,
        "body": wire_body,
        "timings": timings,
    }


def error_envelope(session_id: str, query_id: int, party_index: int, exc: Exception) -> dict:
    return {
        "v": WIRE_VERSION,
        "session": session_id,
        "query_id": query_id,
        "party_index": party_index,
        "status": "error",
        "error_type": type(exc).__name__,
        "error": str(exc),
    }


def response_from_envelope(env: dict) -> QueryResponse:
    if env.get("v") != WIRE_VERSION:
        raise DeserializeError(f"unsupported wire version {env.get('v')!r}")
    body_kind = env.get("body_kind")
    if body_kind == "ciphertexts":
        body = [ciphertext_from_bytes(b64decode_bytes(s)) for s in env["body"]]
    elif body_kind == "partials":
        body = [
            PartialDecryption(d["party_index"], _int_from_b64(d["value"]))
            for d in env["body"]
        ]
    elif body_kind in ("plaintext", "raw"):
        body = env["body"]
    else:
        raise DeserializeError(f"unknown body kind {body_kind!r}")
    return QueryResponse(
        query_id=env["query_id"],
        party_index=env["party_index"],
        body=body,
        timings=env.get("timings", {}),
    )


def _int_to_b64(x: int) -> str:
    raw = x.to_bytes((x.bit_length() + 7) // 8 or 1, "big")
    return b64encode_bytes(raw)


def _int_from_b64(s: str) -> int:
    return int.from_bytes(b64decode_bytes(s), "big")


def encode_envelope(env: dict) -> bytes:
    return json.dumps(env, separators=(",", ":"), sort_keys=True).encode("utf-8")


def decode_envelope(buf: bytes) -> dict:
    try:
        env = json.loads(buf.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DeserializeError(f"malformed envelope: {exc}") from exc
    if not isinstance(env, dict):
        raise DeserializeError("envelope must be a JSON object")
    return env
