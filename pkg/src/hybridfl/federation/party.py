"""Party-side protocol handler.

A party holds its data shard, its key share, and its own randomness. For
each data query it computes the local statistic, adds mechanism noise
scaled to the session's trust level, fixed-point encodes, and (in hybrid
mode) encrypts element by element. Decryption queries return partial
decryptions of the aggregator's folded ciphertexts. The party never
sees, and never needs, anything from its peers.
"""

from __future__ import annotations

import random
import time
import warnings
from typing import Optional

import numpy as np

from hybridfl.dpcore import BudgetLedger, gamma_share_noise, laplace_noise
from hybridfl.federation import messages as msg
from hybridfl.thpaillier import (
    Ciphertext,
    KeyShare,
    VectorCodec,
    ciphertext_from_bytes,
    encrypt,
    partial_decrypt,
)
from hybridfl.trainers import mlp as mlp_trainer
from hybridfl.trainers import svm as svm_trainer


class UnknownQueryKindError(ValueError):
    pass


class BudgetExhaustedError(RuntimeError):
    pass


class Party:
    """One data holder; single-threaded per the protocol contract."""

    def __init__(
        self,
        index: int,
        config: msg.SessionConfig,
        dataset=None,
        key_share: Optional[KeyShare] = None,
        noise_seed: int | None = None,
        crypto_rng: random.Random | None = None,
        session_id: str = "session",
        budget_limit: float | None = None,
        budget_hard: bool = True,
    ) -> None:
        self.index = index
        self.config = config
        self.dataset = dataset
        self.key_share = key_share
        if config.encrypted and key_share is None:
            raise ValueError("hybrid mode requires a key share")
        self.noise_rng = np.random.default_rng(noise_seed)
        self.crypto_rng = crypto_rng or random.SystemRandom()
        self.session_id = session_id
        self.ledger = BudgetLedger()
        self.budget_limit = budget_limit
        self.budget_hard = budget_hard
        self.stats = {"encryptions": 0, "queries": 0}
        self._svm_clipped: dict[float, np.ndarray] = {}
        if config.encrypted:
            self.codec = VectorCodec(
                modulus_bits=key_share.public.n.bit_length(),
                frac_bits=config.frac_bits,
                int_bits=config.int_bits,
                n_summands=config.n_parties,
            )
        else:
            self.codec = None

    # -- wire entry points -------------------------------------------------

    def handle_frame(self, frame: bytes) -> bytes:
        return msg.encode_envelope(self.handle_envelope(msg.decode_envelope(frame)))

    def handle_envelope(self, env: dict) -> dict:
        try:
            query = msg.query_from_envelope(env)
            return self.handle(query)
        except Exception as exc:  # noqa: BLE001 - reported to the aggregator
            return msg.error_envelope(
                env.get("session", self.session_id),
                env.get("query_id", -1),
                self.index,
                exc,
            )

    def handle(self, query: msg.Query) -> dict:
        """Dispatch one query and build the response envelope."""
        self.stats["queries"] += 1
        t0 = time.perf_counter()
        if query.kind == msg.KIND_PARTIAL_DECRYPT:
            body = self._partial_decrypt(query.payload)
            return msg.response_to_envelope(
                self.session_id, query.query_id, self.index, "partials", body,
                {"compute_ms": (time.perf_counter() - t0) * 1e3, "encrypt_ms": 0.0},
            )
        if query.kind == msg.KIND_ECHO:
            return msg.response_to_envelope(
                self.session_id, query.query_id, self.index, "raw",
                [query.payload.get("blob", "")],
                {"compute_ms": (time.perf_counter() - t0) * 1e3, "encrypt_ms": 0.0},
            )

        if query.kind == msg.KIND_COUNTS:
            values = [self._count(query.payload.get("splits", []))]
        elif query.kind == msg.KIND_CLASS_COUNTS:
            values = self._class_counts(query.payload.get("splits", []))
        elif query.kind == msg.KIND_TRAIN_EPOCH_MLP:
            values = self._train_epoch_mlp(query)
        elif query.kind == msg.KIND_TRAIN_EPOCH_SVM:
            values = self._train_epoch_svm(query)
        else:
            raise UnknownQueryKindError(f"unknown query kind {query.kind!r}")

        if query.kind in (msg.KIND_COUNTS, msg.KIND_CLASS_COUNTS):
            values = self._add_count_noise(values, query)
        compute_ms = (time.perf_counter() - t0) * 1e3

        t1 = time.perf_counter()
        if self.config.encrypted:
            plaintexts = self.codec.encode_vector(values)
            body = [
                encrypt(self.key_share.public, m, self.crypto_rng)
                for m in plaintexts
            ]
            self.stats["encryptions"] += len(body)
            body_kind = "ciphertexts"
        else:
            scale = 1 << self.config.frac_bits
            body = [round(float(v) * scale) for v in values]
            body_kind = "plaintext"
        encrypt_ms = (time.perf_counter() - t1) * 1e3

        return msg.response_to_envelope(
            self.session_id, query.query_id, self.index, body_kind, body,
            {"compute_ms": compute_ms, "encrypt_ms": encrypt_ms},
        )

    # -- query evaluation --------------------------------------------------

    def _match_mask(self, splits) -> np.ndarray:
        mask = np.ones(len(self.dataset), dtype=bool)
        for feature, value in splits:
            mask &= self.dataset.rows[:, int(feature)] == int(value)
        return mask

    def _count(self, splits) -> float:
        return float(self._match_mask(splits).sum())

    def _class_counts(self, splits) -> list[float]:
        mask = self._match_mask(splits)
        counts = np.bincount(
            self.dataset.labels[mask], minlength=self.dataset.n_classes
        )
        return [float(c) for c in counts]

    def _effective_trust(self) -> int:
        # local and central baselines add the full, unscaled mechanism noise
        return self.config.trust_t if self.config.mode == "hybrid" else 2

    def _add_count_noise(self, values: list[float], query: msg.Query) -> list[float]:
        if self.config.mode == "none" or query.privacy is None:
            return values
        p = query.privacy
        self._charge_budget(query, epsilon=p.epsilon)
        trust = self._effective_trust()
        if self.config.mode == "hybrid":
            draw = lambda: gamma_share_noise(  # noqa: E731
                p.epsilon, p.sensitivity, trust, self.noise_rng
            ).value
        else:
            draw = lambda: laplace_noise(  # noqa: E731
                p.epsilon, p.sensitivity, self.noise_rng
            ).value
        return [v + draw() for v in values]

    def _train_epoch_mlp(self, query: msg.Query) -> list[float]:
        payload = query.payload
        hyper = mlp_trainer.MlpHyper(**payload["hyper"])
        params = msg.decode_f64(payload["params"])
        noise_std = self._sgd_noise_std(query, hyper.clip * hyper.sigma)
        updated = mlp_trainer.local_train_epoch(
            self.dataset.X,
            self.dataset.y,
            payload["layer_sizes"],
            params,
            hyper,
            noise_std,
            self.noise_rng,
        )
        return list(self._apply_weight(updated, payload))

    def _train_epoch_svm(self, query: msg.Query) -> list[float]:
        payload = query.payload
        hyper = svm_trainer.SvmHyper(**payload["hyper"])
        w = msg.decode_f64(payload["params"])
        if hyper.clip not in self._svm_clipped:
            self._svm_clipped[hyper.clip] = svm_trainer.clip_features(
                self.dataset.X, hyper.clip
            )
        base = hyper.sigma * (hyper.clip if hyper.scale_noise_by_clip else 1.0)
        noise_std = self._sgd_noise_std(query, base)
        updated = svm_trainer.local_train_epochs(
            self._svm_clipped[hyper.clip],
            self.dataset.y,
            w,
            hyper,
            noise_std,
            self.noise_rng,
        )
        return list(self._apply_weight(updated, payload))

    def _apply_weight(self, vector: np.ndarray, payload: dict) -> np.ndarray:
        # weighted averaging: the decrypted sum is divided by n, so a
        # party contributing with weight w_i pre-scales by n*w_i
        weights = payload.get("weights")
        if weights is None:
            return vector
        return vector * (self.config.n_parties * float(weights[self.index - 1]))

    def _sgd_noise_std(self, query: msg.Query, central_std: float) -> float:
        if self.config.mode == "none":
            return 0.0
        sigma = query.privacy.sigma if query.privacy else None
        if sigma:
            self._charge_budget(query, sigma=sigma)
        trust = self._effective_trust()
        return central_std / np.sqrt(trust - 1)

    def _charge_budget(self, query, epsilon=None, sigma=None):
        label = f"{query.kind}#{query.query_id}"
        if epsilon is not None:
            if self.budget_limit is not None and (
                self.ledger.total_epsilon + epsilon > self.budget_limit + 1e-12
            ):
                if self.budget_hard:
                    raise BudgetExhaustedError(
                        f"party {self.index} out of budget at query "
                        f"{query.query_id}"
                    )
                warnings.warn("party privacy budget exceeded", stacklevel=2)
            self.ledger.charge(label, epsilon=epsilon)
        if sigma is not None:
            self.ledger.charge(label, sigma=sigma)

    def _partial_decrypt(self, payload) -> list:
        if self.key_share is None:
            raise UnknownQueryKindError("party holds no key share")
        out = []
        for blob in payload["ciphertexts"]:
            c: Ciphertext = ciphertext_from_bytes(msg.b64decode_bytes(blob))
            out.append(partial_decrypt(self.key_share, c))
        return out
