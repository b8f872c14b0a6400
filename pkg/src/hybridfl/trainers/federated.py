"""Aggregator-side training loops for the epoch-based learners.

Each aggregation round broadcasts the current parameters, collects one
encrypted locally-trained parameter vector per party, and replaces the
model with the decrypted average. The round count is E for the network
(one local epoch per query) and E/K for the SVM (K local epochs per
query); neither depends on the number of parties.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from hybridfl.dpcore import PrivacyParams
from hybridfl.federation import Session
from hybridfl.federation.messages import (
    KIND_TRAIN_EPOCH_MLP,
    KIND_TRAIN_EPOCH_SVM,
    encode_f64,
)
from hybridfl.trainers.mlp import MlpHyper, MlpModel
from hybridfl.trainers.svm import SvmHyper, SvmModel


def _sgd_privacy(session: Session, sigma: float, sensitivity: float):
    if session.config.mode == "none" or sigma == 0:
        return None
    return PrivacyParams(
        sigma=sigma,
        sensitivity=sensitivity,
        trust_t=max(2, session.config.trust_t),
        n_parties=session.config.n_parties,
    )


def _average(plaintexts, n_parties: int, weights_on: bool) -> np.ndarray:
    # responses already carry n*w_i scaling when weighting is on, so the
    # decrypted sum divided by n is the (weighted) average either way
    return np.asarray(plaintexts, dtype=np.float64) / n_parties


def mlp_train(
    session: Session,
    layer_sizes: list[int],
    hyper: MlpHyper,
    init_seed: int = 0,
    shard_weights: Optional[list[float]] = None,
) -> MlpModel:
    """Run E federated epochs of private network training."""
    rng = np.random.default_rng(np.random.SeedSequence(init_seed))
    model = MlpModel.init_random(layer_sizes, rng)
    theta = model.to_vector()
    n = session.config.n_parties
    n_batches = int(np.ceil(1.0 / hyper.batch_rate))

    for epoch in range(hyper.epochs):
        payload = {
            "params": encode_f64(theta),
            "layer_sizes": list(layer_sizes),
            "hyper": {
                "clip": hyper.clip,
                "sigma": hyper.sigma,
                "lr": hyper.lr,
                "batch_rate": hyper.batch_rate,
            },
        }
        if shard_weights is not None:
            payload["weights"] = list(shard_weights)
        plaintexts = session.run_query(
            KIND_TRAIN_EPOCH_MLP,
            payload,
            _sgd_privacy(session, hyper.sigma, hyper.clip),
            response_length=len(theta),
        )
        theta = _average(plaintexts, n, shard_weights is not None)
        if session.config.mode != "none" and hyper.sigma > 0:
            for b in range(n_batches):
                session.ledger.charge(
                    f"mlp/epoch{epoch}/batch{b}", sigma=hyper.sigma
                )
        session.save_checkpoint({"epoch": epoch, "params": encode_f64(theta)})
    return MlpModel.from_vector(layer_sizes, theta)


def svm_train(
    session: Session,
    dim: int,
    hyper: SvmHyper,
    init_seed: int = 0,
    shard_weights: Optional[list[float]] = None,
) -> SvmModel:
    """Run E/K federated rounds of K local SVM epochs each."""
    if hyper.epochs % hyper.epochs_per_query:
        raise ValueError("epochs must be a multiple of epochs_per_query")
    rng = np.random.default_rng(np.random.SeedSequence(init_seed))
    w = rng.normal(0.0, 0.01, size=dim)
    n = session.config.n_parties
    n_rounds = hyper.epochs // hyper.epochs_per_query

    for round_no in range(n_rounds):
        payload = {
            "params": encode_f64(w),
            "hyper": {
                "clip": hyper.clip,
                "sigma": hyper.sigma,
                "lr": hyper.lr,
                "lam": hyper.lam,
                "epochs_per_query": hyper.epochs_per_query,
                "scale_noise_by_clip": hyper.scale_noise_by_clip,
            },
        }
        if shard_weights is not None:
            payload["weights"] = list(shard_weights)
        plaintexts = session.run_query(
            KIND_TRAIN_EPOCH_SVM,
            payload,
            _sgd_privacy(session, hyper.sigma, hyper.clip),
            response_length=dim,
        )
        w = _average(plaintexts, n, shard_weights is not None)
        if session.config.mode != "none" and hyper.sigma > 0:
            for k in range(hyper.epochs_per_query):
                session.ledger.charge(
                    f"svm/round{round_no}/step{k}", sigma=hyper.sigma
                )
        session.save_checkpoint({"round": round_no, "params": encode_f64(w)})
    return SvmModel(w=w, lam=hyper.lam)
