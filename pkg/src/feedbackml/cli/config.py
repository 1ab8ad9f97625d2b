"""Experiment configuration: one JSON file, optional ``key=value`` overrides.

Unknown keys are rejected so a typo cannot silently fall back to a default.
"""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from ..errors import ConfigError

DEFAULTS: dict = {
    "seed": 0,
    "paths": {
        "input": None,
        "stopwords": None,
        "noise_tokens": None,
        "embeddings": None,
        "output_dir": "out",
    },
    "input": {
        "format": "auto",
        "schema": {"id": "id", "text": "text", "type": "type", "agency": "agency", "received_at": None},
    },
    "task": {
        "name": "agency",
        "min_agency_records": 1000,
        "max_agency_records": 2000,
        "balance": {"enabled": False, "per_class": 10000, "max_tokens": 500},
    },
    "cleaning": {"latin_ratio_threshold": 0.5, "lowercase": True},
    "vocab": {"min_count": 1, "seq_len": 255},
    "embedding": {
        "source": "train_word2vec",
        "oov_policy": "uniform",
        "word2vec": {
            "dim": 300, "window": 5, "negatives": 10, "epochs": 5, "learning_rate": 0.05,
            "min_learning_rate_ratio": 1e-4, "min_count": 1, "subsample_threshold": 0.0,
            "workers": 1, "power": 0.75,
        },
    },
    "model": {
        "arch": "bilstm",
        "cnn": {"conv1_filters": 300, "conv1_kernel": 5, "conv2_filters": 300, "conv2_kernel": 4,
                "dense_units": 300, "dropout_rate": 0.5, "embedding_trainable": None},
        "bilstm": {"spatial_dropout": 0.2, "lstm1_units": 300, "lstm2_units": 150, "lstm2_dropout": 0.2,
                   "lstm2_recurrent_dropout": 0.2, "dense_units": 150, "dropout_rate": 0.5,
                   "embedding_trainable": None, "lstm2_bidirectional": True},
    },
    "split": {"mode": "holdout", "train_frac": 0.7, "val_frac": 0.1, "test_frac": 0.2,
              "k": 5, "holdout_val_frac": 0.1},
    "train": {"batch_size": 32, "max_epochs": 50, "optimizer": "adam", "learning_rate": 1e-3,
              "beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "momentum": 0.0, "patience": 3,
              "restore_best": True, "grad_clip_norm": None},
    "predict": {"input": None, "batch_size": 256},
}


def _merge(base: dict, update: dict, path=()) -> dict:
    for key, value in update.items():
        where = ".".join(path + (key,))
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            _merge(base[key], value, path + (key,))
        else:
            base[key] = value
    return base


def parse_override(item: str) -> tuple[list[str], object]:
    """``a.b.c=value``; the value is read as JSON when it parses, else as a string."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_override(config: dict, keys: list[str], value) -> None:
    node = config
    for i, k in enumerate(keys):
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"unknown config key {'.'.join(keys[:i + 1])!r}")
        if i == len(keys) - 1:
            if isinstance(node[k], dict):
                raise ConfigError(f"config key {'.'.join(keys)!r} is a section; set one of its fields")
            node[k] = value
        else:
            node = node[k]


def load_config(path, overrides=()) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        user = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    config = _merge(copy.deepcopy(DEFAULTS), user)
    for item in overrides:
        apply_override(config, *parse_override(item))
    # relative paths resolve against the config file's directory
    for key, value in config["paths"].items():
        if value is not None:
            p = Path(value)
            config["paths"][key] = str(p if p.is_absolute() else (path.parent / p))
    validate(config)
    return config


def validate(config: dict) -> None:
    if not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
        raise ConfigError(f"seed must be an integer, got {config['seed']!r}")
    task = config["task"]["name"]
    if task not in ("agency", "emotion"):
        raise ConfigError(f"task.name must be 'agency' or 'emotion', got {task!r}")
    source = config["embedding"]["source"]
    if source not in ("train_word2vec", "load_pretrained"):
        raise ConfigError(f"embedding.source must be 'train_word2vec' or 'load_pretrained', got {source!r}")
    if source == "load_pretrained" and not config["paths"]["embeddings"]:
        raise ConfigError("embedding.source is 'load_pretrained' but paths.embeddings is not set")
    if config["model"]["arch"] not in ("cnn", "bilstm"):
        raise ConfigError(f"model.arch must be 'cnn' or 'bilstm', got {config['model']['arch']!r}")
    if config["vocab"]["seq_len"] < 1:
        raise ConfigError("vocab.seq_len must be >= 1")
    for key in ("stopwords", "noise_tokens", "embeddings"):
        value = config["paths"][key]
        if value is not None and not Path(value).is_file():
            raise ConfigError(f"paths.{key}: file not found: {value}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stage_hash(stage: str, payload: dict) -> str:
    return hashlib.sha256(canonical_json({"stage": stage, **payload}).encode("utf-8")).hexdigest()
