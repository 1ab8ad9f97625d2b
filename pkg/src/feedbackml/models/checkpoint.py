"""Self-describing binary checkpoints.

Layout (all integers little-endian)::

    8 bytes   magic b"FBCKPT\\0\\0"
    uint32    format version (1)
    uint32    header length n
    n bytes   UTF-8 JSON header
    ...       tensor blobs, concatenated in header order

The header records the architecture tag, the model config, the vocabulary
hash, free-form metadata and a tensor table of ``name``, ``dtype`` and
``shape``. Two extra tensors, ``__sanity_ids`` and ``__sanity_probs``, hold a
fixed input batch and the probabilities it produced at save time; loading
recomputes them and refuses a checkpoint whose outputs drift.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from .base import Model
from .bilstm import BiLstmConfig, build_bilstm
from .cnn import CnnConfig, build_cnn

MAGIC = b"FBCKPT\0\0"
VERSION = 1
SANITY_ROWS = 2
SANITY_TOL = 1e-6

ARCHITECTURES = {
    "cnn": (CnnConfig, build_cnn),
    "bilstm": (BiLstmConfig, build_bilstm),
}


def build_model(arch: str, config: dict, embedding, seed: int = 0) -> Model:
    if arch not in ARCHITECTURES:
        raise DataError(f"unknown architecture {arch!r}; expected one of {sorted(ARCHITECTURES)}")
    config_cls, builder = ARCHITECTURES[arch]
    return builder(config_cls(**config), embedding, seed=seed)


def _sanity_ids(model: Model) -> np.ndarray:
    cfg = model.config
    rng = np.random.default_rng(0)
    return rng.integers(0, cfg.vocab_size, size=(SANITY_ROWS, cfg.seq_len)).astype(np.int32)


def save_checkpoint(path, model: Model, vocab_hash: str, metadata: dict | None = None) -> Path:
    path = Path(path)
    ids = _sanity_ids(model)
    probs = model.forward(ids, mode="infer").data
    tensors = {name: p.data for name, p in model.params.items()}
    tensors["__sanity_ids"] = ids
    tensors["__sanity_probs"] = probs
    table, blobs = [], []
    for name, arr in tensors.items():
        le = "<i4" if np.issubdtype(arr.dtype, np.integer) else "<f4"
        blob = np.ascontiguousarray(arr, dtype=le).tobytes()
        table.append({"name": name, "dtype": le, "shape": list(arr.shape)})
        blobs.append(blob)
    header = {
        "architecture": model.arch,
        "config": model.config_dict(),
        "vocab_hash": vocab_hash,
        "metadata": metadata or {},
        "tensors": table,
    }
    head = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)
    return path


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse a checkpoint into its header and raw tensors, without building a model."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise DataError(f"{path}: not a checkpoint (bad magic)")
    if len(raw) < 16:
        raise DataError(f"{path}: truncated header")
    version, n = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(raw[16:16 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt header ({exc})") from None
    offset = 16 + n
    tensors = {}
    for entry in header["tensors"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        size = count * dtype.itemsize
        if offset + size > len(raw):
            raise DataError(f"{path}: truncated tensor {entry['name']}")
        tensors[entry["name"]] = np.frombuffer(raw, dtype=dtype, count=count,
                                               offset=offset).reshape(entry["shape"])
        offset += size
    if offset != len(raw):
        raise DataError(f"{path}: {len(raw) - offset} trailing bytes after tensors")
    return header, tensors


def load_checkpoint(path, vocab_hash: str | None = None,
                    arch: str | None = None) -> tuple[Model, dict]:
    """Rebuild a model; returns ``(model, metadata)``.

    ``vocab_hash`` and ``arch``, when given, must match the stored values.
    """
    header, tensors = read_checkpoint(path)
    stored_arch = header["architecture"]
    if arch is not None and arch != stored_arch:
        raise DataError(f"architecture mismatch: checkpoint is {stored_arch!r}, expected {arch!r}")
    if vocab_hash is not None and vocab_hash != header["vocab_hash"]:
        raise DataError(f"vocabulary hash mismatch for {stored_arch!r} checkpoint: "
                        f"stored {header['vocab_hash'][:12]}, current {vocab_hash[:12]}")
    sanity_ids = tensors.pop("__sanity_ids")
    sanity_probs = tensors.pop("__sanity_probs")
    model = build_model(stored_arch, header["config"], tensors["embedding"])
    model.load_state_dict(tensors)
    probs = model.forward(sanity_ids, mode="infer").data
    drift = float(np.abs(probs - sanity_probs).max())
    if not drift <= SANITY_TOL:
        raise DataError(f"{path}: sanity batch drifted by {drift:.3g} after loading")
    return model, header["metadata"]
