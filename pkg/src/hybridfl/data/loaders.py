"""File-format loaders: UCI-style CSV, MNIST IDX, libsvm sparse text.

Loaders are pure and deterministic: the same file bytes always produce
the same dataset object (vocabularies in first-occurrence order).
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
import warnings
from pathlib import Path

import numpy as np

from hybridfl.data.datasets import CategoricalDataset, NumericDataset

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class RaggedRowError(ValueError):
    """CSV row with the wrong number of columns."""


class UnknownValueError(ValueError):
    """Value absent from a closed vocabulary in strict mode."""


class BadMagicError(ValueError):
    """IDX file with an unexpected magic number."""


class CountMismatchError(ValueError):
    """IDX image and label files disagree on the record count."""


class IndexOutOfDeclaredRangeError(ValueError):
    """libsvm feature index above the declared dimensionality."""


class ParseError(ValueError):
    """Unparseable libsvm line."""


def load_csv_categorical(
    path: str | Path,
    schema: dict | None = None,
) -> CategoricalDataset:
    """Load a headerless comma-separated categorical file.

    The last column is the class attribute. Vocabularies are built in
    first-occurrence order unless a closed ``schema`` is given, in which
    case unseen values raise ``UnknownValueError``.

    Args:
        path: UTF-8 CSV file, no header (UCI format).
        schema: optional dict with keys ``feature_names``,
            ``feature_values`` (list of vocab lists) and
            ``class_values``; enables strict validation.
    """
    path = Path(path)
    rows: list[list[str]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record:
                continue
            if rows and len(record) != len(rows[0]):
                raise RaggedRowError(
                    f"{path}:{lineno}: expected {len(rows[0])} columns, "
                    f"got {len(record)}"
                )
            rows.append([c.strip() for c in record])
    if not rows:
        raise ValueError(f"{path}: empty file")

    n_features = len(rows[0]) - 1
    if schema is not None:
        feature_names = list(schema["feature_names"])
        vocabs = [list(v) for v in schema["feature_values"]]
        class_vocab = list(schema["class_values"])
        strict = True
    else:
        feature_names = [f"f{j}" for j in range(n_features)]
        vocabs = [[] for _ in range(n_features)]
        class_vocab = []
        strict = False

    lookups = [{v: i for i, v in enumerate(vocab)} for vocab in vocabs]
    class_lookup = {v: i for i, v in enumerate(class_vocab)}

    def index_of(value: str, lookup: dict, vocab: list, what: str) -> int:
        if value in lookup:
            return lookup[value]
        if strict:
            raise UnknownValueError(f"unknown {what} value {value!r}")
        lookup[value] = len(vocab)
        vocab.append(value)
        return lookup[value]

    matrix = np.empty((len(rows), n_features), dtype=np.int64)
    labels = np.empty(len(rows), dtype=np.int64)
    for i, record in enumerate(rows):
        for j in range(n_features):
            matrix[i, j] = index_of(record[j], lookups[j], vocabs[j], f"feature {j}")
        labels[i] = index_of(record[-1], class_lookup, class_vocab, "class")

    return CategoricalDataset(
        feature_names=tuple(feature_names),
        feature_values=tuple(tuple(v) for v in vocabs),
        class_values=tuple(class_vocab),
        rows=matrix,
        labels=labels,
    )


def load_idx(path_images: str | Path, path_labels: str | Path) -> NumericDataset:
    """Load an MNIST-style IDX image/label pair, pixels scaled to [0, 1]."""
    img_buf = Path(path_images).read_bytes()
    lab_buf = Path(path_labels).read_bytes()

    if len(img_buf) < 16 or struct.unpack(">I", img_buf[:4])[0] != IDX_IMAGES_MAGIC:
        raise BadMagicError("bad image-file magic")
    if len(lab_buf) < 8 or struct.unpack(">I", lab_buf[:4])[0] != IDX_LABELS_MAGIC:
        raise BadMagicError("bad label-file magic")

    n_images, n_rows, n_cols = struct.unpack(">III", img_buf[4:16])
    (n_labels,) = struct.unpack(">I", lab_buf[4:8])
    if n_images != n_labels:
        raise CountMismatchError(f"{n_images} images but {n_labels} labels")

    pixels = np.frombuffer(img_buf, dtype=np.uint8, offset=16)
    if pixels.size != n_images * n_rows * n_cols:
        raise CountMismatchError("image payload size does not match header")
    X = pixels.reshape(n_images, n_rows * n_cols).astype(np.float64) / 255.0
    y = np.frombuffer(lab_buf, dtype=np.uint8, offset=8).astype(np.int64)
    if y.size != n_labels:
        raise CountMismatchError("label payload size does not match header")
    return NumericDataset(X, y)


def load_libsvm(path: str | Path, n_features: int | None = None) -> NumericDataset:
    """Load sparse ``label idx:val`` text into a dense matrix.

    Indices are 1-based. When ``n_features`` is declared, larger indices
    raise; otherwise the dimension is the maximum index seen. Labels are
    kept as-is when already in {-1, +1}, else mapped to +/-1 with the
    smaller distinct label becoming -1.
    """
    path = Path(path)
    parsed: list[tuple[float, list[tuple[int, float]]]] = []
    max_index = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                warnings.warn(f"{path}:{lineno}: skipping empty line", stacklevel=2)
                continue
            fields = line.split()
            try:
                label = float(fields[0])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad label {fields[0]!r}") from exc
            entries = []
            for item in fields[1:]:
                try:
                    idx_str, val_str = item.split(":", 1)
                    idx = int(idx_str)
                    val = float(val_str.replace("−", "-"))
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: bad entry {item!r}") from exc
                if idx < 1:
                    raise ParseError(f"{path}:{lineno}: indices are 1-based")
                if n_features is not None and idx > n_features:
                    raise IndexOutOfDeclaredRangeError(
                        f"{path}:{lineno}: index {idx} > declared {n_features}"
                    )
                max_index = max(max_index, idx)
                entries.append((idx, val))
            parsed.append((label, entries))

    dim = n_features if n_features is not None else max_index
    X = np.zeros((len(parsed), dim), dtype=np.float64)
    raw_labels = np.empty(len(parsed), dtype=np.float64)
    for i, (label, entries) in enumerate(parsed):
        raw_labels[i] = label
        for idx, val in entries:
            X[i, idx - 1] = val

    distinct = np.unique(raw_labels)
    if set(distinct) <= {-1.0, 1.0}:
        y = raw_labels.astype(np.int64)
    elif distinct.size == 2:
        y = np.where(raw_labels == distinct[0], -1, 1).astype(np.int64)
    else:
        raise ParseError(f"{path}: expected binary labels, got {distinct}")
    return NumericDataset(X, y)


def write_manifest(path: str | Path, files: dict[str, str | Path]) -> None:
    """Write a manifest mapping logical dataset names to paths + sha256."""
    entries = {}
    for name, file_path in files.items():
        digest = hashlib.sha256(Path(file_path).read_bytes()).hexdigest()
        entries[name] = {"path": str(file_path), "sha256": digest}
    Path(path).write_text(json.dumps(entries, indent=2), encoding="utf-8")


def load_manifest(path: str | Path, verify: bool = True) -> dict[str, Path]:
    """Resolve a manifest back to paths, optionally checking checksums."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    resolved = {}
    for name, entry in entries.items():
        file_path = Path(entry["path"])
        if verify:
            digest = hashlib.sha256(file_path.read_bytes()).hexdigest()
            if digest != entry["sha256"]:
                raise ValueError(f"manifest checksum mismatch for {name}")
        resolved[name] = file_path
    return resolved
