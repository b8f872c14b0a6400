"""Dataset loading, partitioning into party shards, synthetic generators."""

from hybridfl.data.datasets import CategoricalDataset, NumericDataset
from hybridfl.data.loaders import (
    BadMagicError,
    CountMismatchError,
    IndexOutOfDeclaredRangeError,
    ParseError,
    RaggedRowError,
    UnknownValueError,
    load_csv_categorical,
    load_idx,
    load_libsvm,
    load_manifest,
    write_manifest,
)
from hybridfl.data.partition import PartitionPlan, TooManyPartiesError, partition
from hybridfl.data.synth import synth_categorical, synth_linear, synth_multiclass

__all__ = [
    "BadMagicError",
    "CategoricalDataset",
    "CountMismatchError",
    "IndexOutOfDeclaredRangeError",
    "NumericDataset",
    "ParseError",
    "PartitionPlan",
    "RaggedRowError",
    "TooManyPartiesError",
    "UnknownValueError",
    "load_csv_categorical",
    "load_idx",
    "load_libsvm",
    "load_manifest",
    "partition",
    "synth_categorical",
    "synth_linear",
    "synth_multiclass",
    "write_manifest",
]
