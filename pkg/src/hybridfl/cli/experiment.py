"""Experiment sweeps: grid runner, metric rows, CSV emission.

Every grid point runs a fresh in-process session; hybrid and local
points at the same seed share the exact same train/test split and
partition so mode comparisons are paired. Rows are appended even for
failed points (scores as nan) so a long sweep survives one bad cell.
"""

from __future__ import annotations

import csv
import hashlib
import math
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from hybridfl.cli.config import ExperimentConfig
from hybridfl.data import (
    load_csv_categorical,
    load_idx,
    load_libsvm,
    partition,
    synth_categorical,
    synth_linear,
    synth_multiclass,
)
from hybridfl.federation import SessionConfig, build_in_proc_session
from hybridfl.metrics import accuracy, macro_f1, micro_f1
from hybridfl.trainers import federated
from hybridfl.trainers.baselines import random_guess, uniform_guess
from hybridfl.trainers.dt import dt_predict_batch, dt_train
from hybridfl.trainers.mlp import MlpHyper
from hybridfl.trainers.mlp import predict as mlp_predict
from hybridfl.trainers.svm import SvmHyper, clip_features
from hybridfl.trainers.svm import predict as svm_predict

CSV_HEADER = [
    "algorithm", "mode", "dataset", "n_parties", "trust_t", "epsilon",
    "sigma", "seed", "micro_f1", "macro_f1", "accuracy", "t_compute_ms",
    "t_encrypt_ms", "t_aggregate_ms", "t_decrypt_ms", "ledger_eps",
    "ledger_delta",
]

# modes where the trust parameter plays no role; their grid collapses
TRUST_FREE_MODES = ("local", "central", "none", "uniform_guess", "random_guess")


@dataclass
class MetricRow:
    algorithm: str
    mode: str
    dataset: str
    n_parties: int
    trust_t: int
    epsilon: Optional[float]
    sigma: Optional[float]
    seed: int
    micro_f1: float
    macro_f1: float
    accuracy: float
    t_compute_ms: float
    t_encrypt_ms: float
    t_aggregate_ms: float
    t_decrypt_ms: float
    ledger_eps: float
    ledger_delta: float

    def to_csv_values(self) -> list[str]:
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return "nan" if math.isnan(x) else repr(x)
            return str(x)

        return [fmt(getattr(self, name)) for name in CSV_HEADER]


def stable_seed(*parts) -> int:
    digest = hashlib.sha256(repr(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _split(dataset, test_fraction: float, seed: int):
    n = len(dataset)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    return dataset.subset(order[n_test:]), dataset.subset(order[:n_test])


def resolve_dataset(config: ExperimentConfig, seed: int):
    """Return (train, test) for one run.

    File-backed names fall back to the matching synthetic generator when
    the files are absent, so every sweep is runnable offline.
    """
    params = dict(config.dataset_params)
    name = config.dataset
    split_seed = stable_seed("split", config.name, seed)

    if name == "nursery":
        path = params.get("path")
        if path and Path(path).exists():
            return _split(load_csv_categorical(path), config.test_fraction,
                          split_seed)
        warnings.warn("nursery file absent; using the planted-rule synthetic",
                      stacklevel=2)
        name, params = "synthetic-categorical", params.get("fallback", {})
    elif name == "mnist":
        paths = [params.get(k) for k in
                 ("train_images", "train_labels", "test_images", "test_labels")]
        if all(p and Path(p).exists() for p in paths):
            return load_idx(paths[0], paths[1]), load_idx(paths[2], paths[3])
        warnings.warn("mnist files absent; using synthetic class blobs",
                      stacklevel=2)
        name, params = "synthetic-blobs", params.get("fallback", {})
    elif name == "gisette":
        train_p, test_p = params.get("train"), params.get("test")
        if train_p and test_p and Path(train_p).exists() and Path(test_p).exists():
            dim = params.get("dim", 5000)
            return load_libsvm(train_p, dim), load_libsvm(test_p, dim)
        warnings.warn("gisette files absent; using synthetic separable data",
                      stacklevel=2)
        name, params = "synthetic-linear", params.get("fallback", {})

    rows = int(params.pop("rows", 2000))
    test_rows = int(params.pop("test_rows", max(1, rows // 4)))
    train_seed = stable_seed("train", config.name, seed)
    test_seed = stable_seed("test", config.name, seed)
    if name in ("synthetic-categorical", "synthetic-dt"):
        whole = synth_categorical(rows + test_rows, seed=train_seed, **params)
        rng = np.random.default_rng(split_seed)
        order = rng.permutation(len(whole))
        return whole.subset(order[:rows]), whole.subset(order[rows:])
    if name in ("synthetic-linear", "synthetic-svm"):
        return (synth_linear(rows, seed=train_seed, **params),
                synth_linear(test_rows, seed=test_seed, **params))
    if name in ("synthetic-blobs", "synthetic-mlp"):
        return (synth_multiclass(rows, seed=train_seed, **params),
                synth_multiclass(test_rows, seed=test_seed, **params))
    raise ValueError(f"unknown dataset {name!r}")


def _guess_predictions(config, mode, train, test, seed):
    rng = np.random.default_rng(stable_seed("guess", config.name, mode, seed))
    if config.algorithm == "dt":
        labels_train, labels_test = train.labels, test.labels
        n_classes = train.n_classes
    else:
        labels_train, labels_test = train.y, test.y
        n_classes = int(labels_train.max()) + 1
    if mode == "uniform_guess":
        if config.algorithm == "svm":
            preds = np.where(rng.random(len(labels_test)) < 0.5, 1, -1)
        else:
            preds = uniform_guess(n_classes, len(labels_test), rng)
    else:
        preds = random_guess(labels_train, len(labels_test), rng)
    return labels_test, preds


def _run_point(config, mode, n_parties, trust, epsilon, sigma, seed):
    train, test = resolve_dataset(config, seed)

    if mode in ("uniform_guess", "random_guess"):
        y_true, preds = _guess_predictions(config, mode, train, test, seed)
        return y_true, preds, None

    if mode == "central":
        shards = [train]
        n_eff, trust_eff = 1, 2
    else:
        n_eff = n_parties
        trust_eff = trust if mode == "hybrid" else 2
        plan = partition(len(train), n_parties,
                         seed=stable_seed("partition", config.name, seed,
                                          n_parties))
        shards = [train.subset(a) for a in plan.assignments]

    session_cfg = SessionConfig(
        n_parties=n_eff,
        trust_t=trust_eff,
        algorithm=config.algorithm,
        mode=mode,
        key_bits=config.key_bits,
        frac_bits=config.frac_bits,
        int_bits=config.int_bits,
    )
    session = build_in_proc_session(
        session_cfg,
        shards,
        seed=stable_seed("session", config.name, mode, n_parties, trust,
                         epsilon, sigma, seed),
        session_id=f"{config.name}/{mode}/{seed}",
        checkpoint_dir=config.checkpoint_dir,
    )
    init_seed = stable_seed("init", config.name, seed)

    if config.algorithm == "dt":
        model = dt_train(session, train, epsilon=epsilon,
                         depth=config.hyper.get("depth"))
        preds = dt_predict_batch(model, test.rows)
        y_true = test.labels
    elif config.algorithm == "mlp":
        hyper_args = dict(config.hyper)
        layer_sizes = hyper_args.pop(
            "layer_sizes",
            [train.X.shape[1], 60, 1000, int(train.y.max()) + 1],
        )
        hyper = MlpHyper(sigma=sigma if sigma is not None else 0.0,
                         **hyper_args)
        model = federated.mlp_train(session, layer_sizes, hyper,
                                    init_seed=init_seed)
        preds = mlp_predict(model, test.X)
        y_true = test.y
    else:
        hyper_args = dict(config.hyper)
        hyper = SvmHyper(sigma=sigma if sigma is not None else 0.0,
                         **hyper_args)
        model = federated.svm_train(session, train.X.shape[1], hyper,
                                    init_seed=init_seed)
        preds = svm_predict(model, clip_features(test.X, hyper.clip))
        y_true = test.y
    return y_true, preds, session


def run_experiment(config: ExperimentConfig, progress: bool = False) -> list[MetricRow]:
    rows: list[MetricRow] = []
    for mode in config.modes:
        trust_grid = (
            config.trust_t if mode == "hybrid" else [config.trust_t[0]]
        )
        for n_parties in config.n_parties:
            for trust_raw in trust_grid:
                trust = n_parties if trust_raw == 0 else trust_raw
                for epsilon, sigma in config.privacy_grid:
                    for seed in config.seeds:
                        t0 = time.perf_counter()
                        row = _run_cell(config, mode, n_parties, trust,
                                        epsilon, sigma, seed)
                        rows.append(row)
                        if progress:
                            print(
                                f"[{config.name}] {mode} n={n_parties} "
                                f"t={trust} eps={epsilon} sigma={sigma} "
                                f"seed={seed}: micro_f1={row.micro_f1:.4f} "
                                f"({time.perf_counter() - t0:.1f}s)",
                                file=sys.stderr,
                                flush=True,
                            )
    if config.out:
        write_csv(config.out, rows)
    return rows


def _run_cell(config, mode, n_parties, trust, epsilon, sigma, seed) -> MetricRow:
    try:
        y_true, preds, session = _run_point(
            config, mode, n_parties, trust, epsilon, sigma, seed
        )
        scores = (micro_f1(y_true, preds), macro_f1(y_true, preds),
                  accuracy(y_true, preds))
        if session is not None:
            timings = session.timing_totals()
            delta = (config.delta_target
                     if session.ledger.total_rho > 0 else None)
            ledger_eps, ledger_delta = session.ledger.to_eps_delta(delta)
        else:
            timings = {}
            ledger_eps = ledger_delta = 0.0
    except Exception as exc:  # noqa: BLE001 - failed cells become nan rows
        warnings.warn(
            f"grid point failed ({mode}, n={n_parties}, t={trust}, "
            f"eps={epsilon}, sigma={sigma}, seed={seed}): {exc}",
            stacklevel=2,
        )
        scores = (math.nan, math.nan, math.nan)
        timings = {}
        ledger_eps = ledger_delta = math.nan

    if not config.measure_timings:
        timings = {}
    return MetricRow(
        algorithm=config.algorithm,
        mode=mode,
        dataset=config.dataset,
        n_parties=n_parties,
        trust_t=trust,
        epsilon=epsilon,
        sigma=sigma,
        seed=seed,
        micro_f1=scores[0],
        macro_f1=scores[1],
        accuracy=scores[2],
        t_compute_ms=timings.get("compute_ms", 0.0),
        t_encrypt_ms=timings.get("encrypt_ms", 0.0),
        t_aggregate_ms=timings.get("aggregate_ms", 0.0),
        t_decrypt_ms=timings.get("decrypt_ms", 0.0),
        ledger_eps=ledger_eps,
        ledger_delta=ledger_delta,
    )


def write_csv(path: str | Path, rows: list[MetricRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(row.to_csv_values())
