"""Trained-model container: JSON header plus raw float64 parameter block.

Layout: magic ``HFLM``, one version byte, 4-byte big-endian header
length, UTF-8 JSON header, then the parameters as little-endian float64.
Trees keep their structure in the header and have an empty block.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from hybridfl.trainers.dt import TreeModel
from hybridfl.trainers.mlp import MlpModel
from hybridfl.trainers.svm import SvmModel

MAGIC = b"HFLM"
VERSION = 1


class ModelFormatError(ValueError):
    pass


def save_model(path: str | Path, model, metadata: dict | None = None) -> None:
    header: dict = {"version": VERSION, "metadata": metadata or {}}
    if isinstance(model, TreeModel):
        header["model_type"] = "dt"
        header["tree"] = model.to_dict()
        block = b""
    elif isinstance(model, MlpModel):
        header["model_type"] = "mlp"
        header["layer_sizes"] = list(model.layer_sizes)
        block = np.asarray(model.to_vector(), dtype="<f8").tobytes()
    elif isinstance(model, SvmModel):
        header["model_type"] = "svm"
        header["lam"] = model.lam
        header["dim"] = int(model.w.shape[0])
        block = np.asarray(model.w, dtype="<f8").tobytes()
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")

    head = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = MAGIC + bytes([VERSION]) + struct.pack(">I", len(head)) + head + block
    Path(path).write_bytes(payload)


def load_model(path: str | Path):
    """Return (model, metadata)."""
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise ModelFormatError("not a model container")
    if buf[4] != VERSION:
        raise ModelFormatError(f"unsupported container version {buf[4]}")
    (head_len,) = struct.unpack(">I", buf[5:9])
    header = json.loads(buf[9 : 9 + head_len].decode("utf-8"))
    block = np.frombuffer(buf[9 + head_len :], dtype="<f8")

    kind = header["model_type"]
    if kind == "dt":
        model = TreeModel.from_dict(header["tree"])
    elif kind == "mlp":
        model = MlpModel.from_vector(header["layer_sizes"], block.copy())
    elif kind == "svm":
        if block.shape[0] != header["dim"]:
            raise ModelFormatError("parameter block does not match header dim")
        model = SvmModel(w=block.copy(), lam=header["lam"])
    else:
        raise ModelFormatError(f"unknown model type {kind!r}")
    return model, header.get("metadata", {})
