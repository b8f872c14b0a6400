"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import functools
import json
import random
import sys
import time
from pathlib import Path

import click
import numpy as np

from hybridfl.cli.config import ConfigError, load_config
from hybridfl.cli.experiment import run_experiment, stable_seed, write_csv
from hybridfl.cli.report import SchemaMismatchError, report_files
from hybridfl.data import load_csv_categorical, load_libsvm
from hybridfl.data.datasets import NumericDataset


def _runtime_guard(fn):
    """Map config errors to exit 2 and runtime failures to exit 3."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, SchemaMismatchError) as exc:
            raise click.UsageError(str(exc)) from exc
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


@click.group()
def main() -> None:
    """Privacy-preserving federated learning toolkit."""


@main.command()
@click.option("--bits", default=2048, show_default=True, help="Modulus size.")
@click.option("--parties", "n_parties", type=int, required=True)
@click.option("--trust", type=int, default=None,
              help="Minimum honest non-colluding parties; quorum becomes "
                   "n - trust + 1.")
@click.option("--threshold", type=int, default=None,
              help="Explicit decryption quorum (alternative to --trust).")
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True)
@click.option("--seed", type=int, default=None,
              help="Deterministic dealing for tests; omit for system randomness.")
@_runtime_guard
def keygen(bits, n_parties, trust, threshold, out_dir, seed) -> None:
    """Deal a threshold key set to dealer and share files."""
    from hybridfl.thpaillier import deal_keys, key_share_to_bytes, public_key_to_bytes

    if (trust is None) == (threshold is None):
        raise ConfigError("give exactly one of --trust or --threshold")
    if threshold is None:
        if not 2 <= trust <= n_parties:
            raise ConfigError("--trust must satisfy 2 <= t <= parties")
        threshold = n_parties - trust + 1
    pk, shares = deal_keys(bits, n_parties, threshold, rng_seed=seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "dealer.pub").write_bytes(public_key_to_bytes(pk))
    for share in shares:
        path = out_dir / f"share_{share.party_index}.key"
        path.write_bytes(key_share_to_bytes(share))
    click.echo(
        f"wrote dealer.pub and {n_parties} share files to {out_dir} "
        f"(quorum {threshold} of {n_parties})"
    )


def _load_party_dataset(path: Path):
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return load_csv_categorical(path)
    if suffix == ".npz":
        blob = np.load(path)
        return NumericDataset(blob["X"], blob["y"])
    if suffix in (".libsvm", ".txt"):
        return load_libsvm(path)
    raise ConfigError(f"unsupported data format {suffix!r}")


@main.command()
@click.option("--share", type=click.Path(path_type=Path, exists=True),
              default=None, help="Key share file (hybrid mode).")
@click.option("--data", type=click.Path(path_type=Path, exists=True),
              required=True, help="Local shard: .csv, .npz, or .libsvm.")
@click.option("--connect", required=True, help="Aggregator host:port.")
@click.option("--token", required=True, help="Pre-shared session token.")
@click.option("--mode", default="hybrid", show_default=True,
              type=click.Choice(["hybrid", "local", "central", "none"]))
@click.option("--n-parties", type=int, required=True)
@click.option("--trust", type=int, default=2, show_default=True)
@click.option("--index", type=int, default=None,
              help="Party index; defaults to the share file's.")
@click.option("--frac-bits", type=int, default=32, show_default=True)
@click.option("--int-bits", type=int, default=16, show_default=True)
@click.option("--noise-seed", type=int, default=None)
@_runtime_guard
def party(share, data, connect, token, mode, n_parties, trust, index,
          frac_bits, int_bits, noise_seed) -> None:
    """Run a standalone party daemon against a listening aggregator."""
    from hybridfl.federation import Party, SessionConfig, run_party_client
    from hybridfl.thpaillier import key_share_from_bytes

    key_share = None
    if share is not None:
        key_share = key_share_from_bytes(share.read_bytes())
    if mode == "hybrid" and key_share is None:
        raise ConfigError("hybrid mode requires --share")
    if index is None:
        if key_share is None:
            raise ConfigError("--index is required without a share file")
        index = key_share.party_index

    config = SessionConfig(
        n_parties=n_parties, trust_t=trust, mode=mode,
        frac_bits=frac_bits, int_bits=int_bits,
    )
    node = Party(
        index=index, config=config, dataset=_load_party_dataset(data),
        key_share=key_share, noise_seed=noise_seed,
    )
    host, port = connect.rsplit(":", 1)
    click.echo(f"party {index} connecting to {host}:{port}", err=True)
    run_party_client((host, int(port)), token, node)
    click.echo(f"party {index}: session closed", err=True)


@main.command()
@click.option("--config", "config_path",
              type=click.Path(path_type=Path, exists=True), required=True)
@click.option("--listen", default="127.0.0.1:0", show_default=True)
@click.option("--token", required=True)
@click.option("--public-key", type=click.Path(path_type=Path, exists=True),
              default=None, help="Dealer file from keygen (hybrid mode).")
@click.option("--model-out", type=click.Path(path_type=Path), default=None)
@click.option("--ledger-out", type=click.Path(path_type=Path), default=None)
@_runtime_guard
def aggregate(config_path, listen, token, public_key, model_out,
              ledger_out) -> None:
    """Drive one training session over sockets (first grid point)."""
    from hybridfl.federation import AggregatorListener, Session, SessionConfig
    from hybridfl.thpaillier import public_key_from_bytes
    from hybridfl.trainers import federated
    from hybridfl.trainers.dt import dt_train
    from hybridfl.trainers.models import save_model

    config = load_config(config_path)
    mode = config.modes[0]
    if mode not in ("hybrid", "local", "central", "none"):
        raise ConfigError(f"mode {mode!r} cannot drive a live session")
    n_parties = config.n_parties[0]
    trust = config.trust_t[0]
    epsilon, sigma = config.privacy_grid[0]
    session_cfg = SessionConfig(
        n_parties=1 if mode == "central" else n_parties,
        trust_t=trust if mode == "hybrid" else 2,
        algorithm=config.algorithm,
        mode=mode,
        key_bits=config.key_bits,
        frac_bits=config.frac_bits,
        int_bits=config.int_bits,
    )
    pk = None
    if session_cfg.encrypted:
        if public_key is None:
            raise ConfigError("hybrid sessions need --public-key from keygen")
        pk = public_key_from_bytes(public_key.read_bytes())

    host, port = listen.rsplit(":", 1)
    listener = AggregatorListener((host, int(port)), token)
    click.echo(f"listening on {listener.address[0]}:{listener.address[1]}",
               err=True)
    try:
        channels = listener.accept_parties(session_cfg.n_parties, timeout=120.0)
        session = Session(session_cfg, channels, pk=pk, session_id=config.name)
        init_seed = stable_seed(config.name)
        if config.algorithm == "dt":
            from hybridfl.cli.experiment import resolve_dataset

            # the aggregator needs the (public) schema, never the rows
            schema, _ = resolve_dataset(config, config.seeds[0])
            model = dt_train(session, schema, epsilon=epsilon,
                             depth=config.hyper.get("depth"))
        elif config.algorithm == "mlp":
            from hybridfl.trainers.mlp import MlpHyper

            hyper_args = dict(config.hyper)
            layer_sizes = hyper_args.pop("layer_sizes")
            hyper = MlpHyper(sigma=sigma or 0.0, **hyper_args)
            model = federated.mlp_train(session, layer_sizes, hyper,
                                        init_seed=init_seed)
        else:
            from hybridfl.trainers.svm import SvmHyper

            hyper_args = dict(config.hyper)
            dim = hyper_args.pop("dim")
            hyper = SvmHyper(sigma=sigma or 0.0, **hyper_args)
            model = federated.svm_train(session, dim, hyper,
                                        init_seed=init_seed)
        if model_out:
            save_model(
                model_out, model,
                metadata={"config": config.name, "mode": mode,
                          "ledger": session.ledger.report(config.delta_target)},
            )
            click.echo(f"model written to {model_out}")
        if ledger_out:
            Path(ledger_out).write_text(
                session.ledger.to_json(config.delta_target), encoding="utf-8"
            )
    finally:
        listener.close()


@main.command()
@click.option("--model", "model_path",
              type=click.Path(path_type=Path, exists=True), required=True)
@click.option("--data", "data_path",
              type=click.Path(path_type=Path, exists=True), required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Predictions CSV; stdout when omitted.")
@_runtime_guard
def predict(model_path, data_path, out) -> None:
    """Load a saved model and emit predictions for a data file."""
    from hybridfl.trainers.dt import TreeModel, dt_predict
    from hybridfl.trainers.mlp import MlpModel
    from hybridfl.trainers.mlp import predict as mlp_predict
    from hybridfl.trainers.models import load_model
    from hybridfl.trainers.svm import SvmModel, clip_features
    from hybridfl.trainers.svm import predict as svm_predict

    model, metadata = load_model(model_path)
    if isinstance(model, TreeModel):
        dataset = load_csv_categorical(data_path)
        lookups = [
            {v: i for i, v in enumerate(vocab)} for vocab in model.feature_values
        ]
        labels = []
        for raw in dataset.rows:
            row = [
                lookups[j].get(dataset.feature_values[j][raw[j]], -1)
                for j in range(len(lookups))
            ]
            labels.append(model.class_values[dt_predict(model, row)])
    elif isinstance(model, MlpModel):
        dataset = _load_party_dataset(data_path)
        labels = [str(p) for p in mlp_predict(model, dataset.X)]
    elif isinstance(model, SvmModel):
        dataset = _load_party_dataset(data_path)
        clip = float(metadata.get("clip", 4.0))
        labels = [str(p) for p in svm_predict(model, clip_features(dataset.X,
                                                                   clip))]
    else:
        raise ConfigError("unknown model type")

    text = "prediction\n" + "\n".join(labels) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("bench-crypto")
@click.option("--bits", default=2048, show_default=True)
@click.option("--parties", "n_parties", default=10, show_default=True)
@click.option("--threshold", default=6, show_default=True)
@click.option("--ops", default=50, show_default=True)
@_runtime_guard
def bench_crypto(bits, n_parties, threshold, ops) -> None:
    """Per-element encrypt / partial-decrypt / combine latency."""
    from hybridfl.thpaillier import combine, deal_keys, encrypt, partial_decrypt

    rng = random.Random(0)
    t0 = time.perf_counter()
    pk, shares = deal_keys(bits, n_parties, threshold, rng_seed=rng)
    keygen_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    cts = [encrypt(pk, rng.randrange(pk.n), rng) for _ in range(ops)]
    encrypt_ms = (time.perf_counter() - t0) / ops * 1e3

    t0 = time.perf_counter()
    partials = [
        [partial_decrypt(s, c) for s in shares[:threshold]] for c in cts
    ]
    partial_ms = (time.perf_counter() - t0) / (ops * threshold) * 1e3

    t0 = time.perf_counter()
    for parts in partials:
        combine(pk, parts)
    combine_ms = (time.perf_counter() - t0) / ops * 1e3

    click.echo(json.dumps({
        "bits": bits,
        "n_parties": n_parties,
        "threshold": threshold,
        "keygen_s": round(keygen_s, 3),
        "encrypt_ms_per_element": round(encrypt_ms, 4),
        "partial_decrypt_ms_per_element": round(partial_ms, 4),
        "combine_ms_per_element": round(combine_ms, 4),
    }, indent=2))


@main.command()
@click.option("--config", "config_path",
              type=click.Path(path_type=Path, exists=True), required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Override the config's CSV output path.")
@click.option("--progress/--no-progress", default=True, show_default=True)
@_runtime_guard
def run(config_path, out, progress) -> None:
    """Run an experiment sweep from a TOML config."""
    config = load_config(config_path)
    if out is not None:
        config.out = str(out)
    rows = run_experiment(config, progress=progress)
    if config.out:
        click.echo(f"{len(rows)} rows written to {config.out}")
    else:
        write_csv("/dev/stdout", rows)


@main.command("report")
@click.argument("csv_paths", nargs=-1, required=True,
                type=click.Path(path_type=Path, exists=True))
@click.option("--json-out", type=click.Path(path_type=Path), default=None)
@_runtime_guard
def report_cmd(csv_paths, json_out) -> None:
    """Summarize experiment CSVs (mean +/- std across seeds)."""
    click.echo(report_files(list(csv_paths), json_out=json_out), nl=False)


if __name__ == "__main__":
    main()
