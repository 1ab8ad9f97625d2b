"""Pipeline stages behind ``feedbackctl``.

Each stage writes into ``<output_dir>/<stage>-<hash12>/`` where the hash
covers the stage's own settings plus its upstream hash, so two different
preprocessing variants can never share a directory. Every stage directory
holds a ``manifest.json`` with the full hash; downstream stages recompute
the hash they expect and refuse anything else. Manifests are deterministic;
wall-clock details go to ``run_info.json``.
"""
from __future__ import annotations

import csv
import json
import logging
import shutil
import time
import warnings
from collections import Counter
from pathlib import Path

import numpy as np

from ..corpus import (
    CleaningConfig,
    EncodedDataset,
    LabeledTokens,
    Vocabulary,
    balance_subsample,
    build_vocabulary,
    default_noise_tokens,
    default_stopwords,
    filter_tokens,
    ingest,
    is_cyrillic_dominant,
    load_token_list,
    map_emotion_label,
    normalize_text,
    read_texts,
    tokenize,
    write_rejects,
)
from ..embeddings import (
    EmbeddingMatrix,
    Word2VecConfig,
    coverage,
    load_binary,
    load_vec,
    project_to_vocab,
    save_binary,
    save_vec,
    train_word2vec_cbow,
)
from ..errors import ConfigError, DataError
from ..models import build_model, load_checkpoint, save_checkpoint
from ..models.bilstm import BiLstmConfig
from ..models.cnn import CnnConfig
from ..training import (
    MetricWarning,
    TrainConfig,
    aggregate,
    evaluate,
    kfold_indices,
    split_indices,
    train_model,
)
from .config import canonical_json, file_digest, stage_hash

log = logging.getLogger("feedbackctl")

SCORE_KEYS = ("accuracy", "precision_micro", "recall_micro", "f1_micro",
              "precision_macro", "recall_macro", "f1_macro")
ARCH_CONFIGS = {"cnn": CnnConfig, "bilstm": BiLstmConfig}


def _make(cls, where: str, **kwargs):
    """Construct a settings dataclass, reporting bad values as config errors."""
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


class Pipeline:
    def __init__(self, config: dict):
        self.config = config
        self.out = Path(config["paths"]["output_dir"])
        self._hashes: dict[str, str] = {}

    # -- hashing ---------------------------------------------------------------
    def _input_path(self) -> Path:
        value = self.config["paths"]["input"]
        if not value:
            raise ConfigError("paths.input is not set")
        path = Path(value)
        if not path.is_file():
            raise ConfigError(f"paths.input: file not found: {path}")
        return path

    def cleaning_config(self) -> CleaningConfig:
        paths, c = self.config["paths"], self.config["cleaning"]
        stop = load_token_list(paths["stopwords"]) if paths["stopwords"] else default_stopwords()
        noise = load_token_list(paths["noise_tokens"]) if paths["noise_tokens"] else default_noise_tokens()
        return CleaningConfig(stopwords=stop, noise_tokens=noise,
                              latin_ratio_threshold=c["latin_ratio_threshold"], lowercase=c["lowercase"])

    def hash_for(self, stage: str) -> str:
        if stage in self._hashes:
            return self._hashes[stage]
        c = self.config
        if stage == "prepare":
            cleaning = self.cleaning_config()
            payload = {"input_sha256": file_digest(self._input_path()), "input": c["input"], "task": c["task"],
                       "cleaning": c["cleaning"], "vocab": c["vocab"], "seed": c["seed"],
                       "stopwords": sorted(cleaning.stopwords), "noise_tokens": sorted(cleaning.noise_tokens)}
        elif stage == "embed":
            emb = c["embedding"]
            payload = {"upstream": self.hash_for("prepare"), "seed": c["seed"], "source": emb["source"],
                       "oov_policy": emb["oov_policy"]}
            if emb["source"] == "train_word2vec":
                payload["word2vec"] = emb["word2vec"]
            else:
                payload["embeddings_sha256"] = file_digest(c["paths"]["embeddings"])
        elif stage == "train":
            arch = c["model"]["arch"]
            payload = {"upstream": self.hash_for("embed"), "seed": c["seed"], "arch": arch,
                       "model": c["model"][arch], "split": c["split"], "train": c["train"]}
        elif stage == "evaluate":
            payload = {"upstream": self.hash_for("train")}
        elif stage == "report":
            payload = {"upstream": self.hash_for("prepare")}
        else:
            raise ValueError(stage)
        self._hashes[stage] = stage_hash(stage, payload)
        return self._hashes[stage]

    def stage_dir(self, stage: str, full_hash: str | None = None) -> Path:
        return self.out / f"{stage}-{(full_hash or self.hash_for(stage))[:12]}"

    def require(self, stage: str) -> tuple[Path, dict]:
        """Locate a finished upstream stage whose manifest matches the current config."""
        expected = self.hash_for(stage)
        d = self.stage_dir(stage, expected)
        manifest_path = d / "manifest.json"
        if not manifest_path.is_file():
            others = sorted(p.name for p in self.out.glob(f"{stage}-*") if p.is_dir()) if self.out.is_dir() else []
            hint = f"; found outputs for other configurations: {', '.join(others)}" if others else ""
            raise ConfigError(f"missing prerequisite: no '{stage}' output for this configuration "
                              f"(expected {d}); run `feedbackctl {stage}` first{hint}")
        manifest = _read_json(manifest_path)
        if manifest.get("config_hash") != expected:
            raise DataError(f"config hash mismatch in {manifest_path}: manifest has "
                            f"{str(manifest.get('config_hash'))[:12]}, current configuration expects {expected[:12]}")
        return d, manifest

    # -- stage scaffolding -------------------------------------------------------
    def _run_stage(self, stage: str, body, full_hash: str | None = None) -> Path:
        full_hash = full_hash or self.hash_for(stage)
        final = self.stage_dir(stage, full_hash)
        tmp = self.out / f".{final.name}.tmp"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)
        started = time.time()
        log.info("%s -> %s", stage, final)
        try:
            manifest = body(tmp)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        manifest = {"stage": stage, "config_hash": full_hash, **manifest}
        _write_json(tmp / "manifest.json", manifest)
        _write_json(tmp / "run_info.json",
                    {"started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
                     "duration_seconds": round(time.time() - started, 3)})
        if final.exists():
            shutil.rmtree(final)
        tmp.rename(final)
        return final

    # -- prepare -------------------------------------------------------------------
    def prepare(self) -> Path:
        c = self.config
        cleaning = self.cleaning_config()

        def body(d: Path) -> dict:
            records, rejects = ingest(self._input_path(), c["input"]["schema"], c["input"]["format"])
            counts = {"rows_read": len(records) + len(rejects), "rows_rejected": len(rejects),
                      "records": len(records)}
            task = c["task"]
            if task["name"] == "agency":
                per_agency = Counter(r.agency for r in records if r.agency)
                lo, hi = task["min_agency_records"], task["max_agency_records"]
                chosen = {a for a, n in per_agency.items() if lo <= n <= hi}
                if not chosen:
                    raise DataError(f"no agency has between {lo} and {hi} records "
                                    f"(largest: {per_agency.most_common(3)})")
                selected = [(r, r.agency) for r in records if r.agency in chosen]
            else:
                selected = [(r, map_emotion_label(r.feedback_type).value) for r in records]
                selected = [(r, lab) for r, lab in selected if lab != "excluded"]
            counts["task_selected"] = len(selected)

            corpus_lines, kept, latin, empty = [], [], 0, 0
            cleaned = {}
            for r in records:
                text = normalize_text(r.text, cleaning)
                if not is_cyrillic_dominant(text, cleaning.latin_ratio_threshold):
                    cleaned[r.id] = None
                    continue
                tokens = filter_tokens(tokenize(text), cleaning)
                cleaned[r.id] = tokens
                if tokens:
                    corpus_lines.append(" ".join(tokens))
            for r, label in selected:
                tokens = cleaned[r.id]
                if tokens is None:
                    latin += 1
                elif not tokens:
                    empty += 1
                else:
                    kept.append(LabeledTokens(r.id, tokens, label,
                                              {"type": r.feedback_type.value, "agency": r.agency}))
            counts["after_latin_filter"] = len(selected) - latin
            counts["after_token_filter"] = len(kept)
            if task["balance"]["enabled"]:
                bal = task["balance"]
                kept = balance_subsample(kept, bal["per_class"], bal["max_tokens"], c["seed"])
                counts["after_balance"] = len(kept)
            if not kept:
                raise DataError("empty output dataset after cleaning and task selection")
            classes = sorted({k.label for k in kept})
            vocab = build_vocabulary([k.tokens for k in kept], c["vocab"]["min_count"])
            seq_len = c["vocab"]["seq_len"]
            dataset = EncodedDataset.from_tokens([k.tokens for k in kept], [classes.index(k.label) for k in kept],
                                                 vocab, seq_len, classes)
            dataset.save(d / "dataset.npz")
            vocab.save(d / "vocab.txt")
            write_rejects(d / "rejects.jsonl", rejects)
            (d / "corpus.txt").write_text("".join(line + "\n" for line in corpus_lines), encoding="utf-8")
            with open(d / "examples.jsonl", "w", encoding="utf-8") as fh:
                for k in kept:
                    fh.write(canonical_json({"id": k.id, "label": k.label, **k.meta}) + "\n")
            with open(d / "records.jsonl", "w", encoding="utf-8") as fh:
                for r in records:
                    fh.write(canonical_json({"id": r.id, "type": r.feedback_type.value, "agency": r.agency}) + "\n")
            return {"counts": counts, "classes": classes, "class_counts": dict(Counter(k.label for k in kept)),
                    "vocab_size": len(vocab), "vocab_hash": vocab.hash, "seq_len": seq_len,
                    "truncated": int(sum(len(k.tokens) > seq_len for k in kept)),
                    "task": task["name"]}

        return self._run_stage("prepare", body)

    # -- embed ---------------------------------------------------------------------
    def embed(self) -> Path:
        c = self.config
        prep_dir, prep = self.require("prepare")
        vocab = Vocabulary.load(prep_dir / "vocab.txt")
        emb_cfg = c["embedding"]

        def body(d: Path) -> dict:
            info = {"source": emb_cfg["source"], "upstream": {"prepare": prep["config_hash"]}}
            if emb_cfg["source"] == "train_word2vec":
                corpus = [line.split() for line in
                          (prep_dir / "corpus.txt").read_text(encoding="utf-8").splitlines()]
                w2v = _make(Word2VecConfig, "embedding.word2vec", **emb_cfg["word2vec"], seed=c["seed"])
                w_vocab, matrix = train_word2vec_cbow(corpus, w2v)
                tokens = w_vocab.corpus_tokens
                source = EmbeddingMatrix(matrix.values[2:])
                info["word2vec_vocab_size"] = len(tokens)
            else:
                path = Path(c["paths"]["embeddings"])
                all_tokens, all_vectors = load_binary(path) if path.suffix == ".bin" else load_vec(path)
                keep = [i for i, t in enumerate(all_tokens) if vocab.token_to_id.get(t, 0) > 1]
                if not keep:
                    raise DataError(f"no vector in {path} covers the task vocabulary")
                tokens = [all_tokens[i] for i in keep]
                source = EmbeddingMatrix(all_vectors.values[keep])
                info["pretrained_vectors"] = len(all_tokens)
            save_vec(d / "vectors.vec", tokens, source)
            save_binary(d / "vectors.bin", tokens, source)
            projected = project_to_vocab(tokens, source, vocab, emb_cfg["oov_policy"], seed=c["seed"])
            save_binary(d / "embedding.bin", vocab.id_to_token, projected)
            info.update({"dim": source.dim, "vectors": len(tokens), "coverage": coverage(tokens, vocab),
                         "vocab_hash": vocab.hash})
            return info

        return self._run_stage("embed", body)

    # -- train -----------------------------------------------------------------------
    def _model_config(self, dataset: EncodedDataset, vocab_size: int, dim: int) -> dict:
        arch = self.config["model"]["arch"]
        cfg = dict(self.config["model"][arch], vocab_size=vocab_size, num_classes=len(dataset.classes),
                   dim=dim, seq_len=dataset.seq_len)
        if cfg["embedding_trainable"] is None:
            # null: fine-tune self-trained vectors, freeze pretrained ones
            cfg["embedding_trainable"] = self.config["embedding"]["source"] == "train_word2vec"
        _make(ARCH_CONFIGS[arch], f"model.{arch}", **cfg)  # validate early
        return cfg

    def _runs(self, labels: np.ndarray) -> list[tuple[str, np.ndarray, np.ndarray, np.ndarray]]:
        s, seed = self.config["split"], self.config["seed"]
        if s["mode"] == "holdout":
            train, val, test = split_indices(labels, (s["train_frac"], s["val_frac"], s["test_frac"]), seed)
            return [("holdout", train, val, test)]
        if s["mode"] != "kfold":
            raise ConfigError(f"split.mode must be 'holdout' or 'kfold', got {s['mode']!r}")
        runs = []
        hv = s["holdout_val_frac"]
        for f, (rest, test) in enumerate(kfold_indices(labels, s["k"], seed), start=1):
            inner_train, inner_val, _ = split_indices(labels[rest], (1 - hv, hv, 0.0), seed + f)
            runs.append((f"fold-{f}", rest[inner_train], rest[inner_val], test))
        return runs

    def train(self) -> Path:
        c = self.config
        emb_dir, emb = self.require("embed")
        prep_dir, prep = self.require("prepare")
        dataset = EncodedDataset.load(prep_dir / "dataset.npz")
        vocab = Vocabulary.load(prep_dir / "vocab.txt")
        tokens, matrix = load_binary(emb_dir / "embedding.bin")
        if tokens != vocab.id_to_token:
            raise DataError("embedding matrix rows do not match the prepared vocabulary")
        arch = c["model"]["arch"]
        model_cfg = self._model_config(dataset, len(vocab), matrix.dim)

        def body(d: Path) -> dict:
            summaries = []
            for offset, (name, tr, va, te) in enumerate(self._runs(dataset.labels)):
                run_dir = d / name
                run_dir.mkdir()
                seed = c["seed"] + offset
                model = build_model(arch, model_cfg, matrix.values, seed=seed)
                tcfg = _make(TrainConfig, "train", **c["train"], seed=seed)
                log.info("training %s: %d train / %d val / %d test", name, len(tr), len(va), len(te))
                model, history = train_model(model, dataset.subset(tr), dataset.subset(va), tcfg,
                                             history_path=run_dir / "history.csv")
                save_checkpoint(run_dir / "model.ckpt", model, vocab.hash,
                                {"run": name, "best_epoch": history.best_epoch,
                                 "stopped_epoch": history.stopped_epoch})
                _write_json(run_dir / "indices.json", {"train": tr.tolist(), "val": va.tolist(), "test": te.tolist()})
                summaries.append({"name": name, "train": len(tr), "val": len(va), "test": len(te),
                                  "best_epoch": history.best_epoch, "stopped_epoch": history.stopped_epoch,
                                  "early_stopped": history.early_stopped})
            return {"arch": arch, "model_config": model_cfg, "mode": c["split"]["mode"], "runs": summaries,
                    "vocab_hash": vocab.hash, "classes": list(dataset.classes),
                    "upstream": {"prepare": prep["config_hash"], "embed": emb["config_hash"]}}

        return self._run_stage("train", body)

    # -- evaluate --------------------------------------------------------------------
    def _load_runs(self):
        train_dir, manifest = self.require("train")
        models = []
        for run in manifest["runs"]:
            model, meta = load_checkpoint(train_dir / run["name"] / "model.ckpt",
                                          vocab_hash=manifest["vocab_hash"], arch=manifest["arch"])
            models.append((run["name"], model, train_dir / run["name"]))
        return train_dir, manifest, models

    def evaluate(self) -> Path:
        prep_dir, _ = self.require("prepare")
        dataset = EncodedDataset.load(prep_dir / "dataset.npz")
        train_dir, train_manifest, models = self._load_runs()
        classes = list(dataset.classes)

        def body(d: Path) -> dict:
            per_run, rows = [], []
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", MetricWarning)
                for name, model, run_dir in models:
                    test_idx = np.asarray(_read_json(run_dir / "indices.json")["test"], dtype=np.int64)
                    m = evaluate(model, dataset.subset(test_idx))
                    per_run.append(m)
                    rows.append({"fold": name, **m.to_dict(classes)})
                    _write_confusion(d / f"confusion-{name}.csv", m.confusion_matrix, classes)
            total = sum(m.confusion_matrix for m in per_run)
            _write_confusion(d / "confusion.csv", total, classes)
            agg = aggregate(per_run)
            metrics = {"mode": train_manifest["mode"], "arch": train_manifest["arch"], "classes": classes,
                       "folds": rows, "aggregate": agg}
            _write_json(d / "metrics.json", metrics)
            with open(d / "folds.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("fold",) + SCORE_KEYS)
                for r in rows:
                    w.writerow([r["fold"]] + [f"{r[k]:.6f}" for k in SCORE_KEYS])
                w.writerow(["mean"] + [f"{agg[k]['mean']:.6f}" for k in SCORE_KEYS])
                w.writerow(["std"] + [f"{agg[k]['std']:.6f}" for k in SCORE_KEYS])
            return {"upstream": {"train": train_manifest["config_hash"]},
                    "accuracy_mean": agg["accuracy"]["mean"],
                    "metric_warnings": sorted({str(x.message) for x in caught})}

        return self._run_stage("evaluate", body)

    # -- predict ---------------------------------------------------------------------
    def predict(self, input_path=None, output=None) -> Path:
        c = self.config
        input_path = input_path or c["predict"]["input"]
        if not input_path:
            raise ConfigError("predict needs an input file (--input or predict.input)")
        input_path = Path(input_path)
        if not input_path.is_file():
            raise ConfigError(f"predict input not found: {input_path}")
        prep_dir, _ = self.require("prepare")
        vocab = Vocabulary.load(prep_dir / "vocab.txt")
        train_dir, manifest, models = self._load_runs()
        classes = manifest["classes"]
        seq_len = manifest["model_config"]["seq_len"]
        cleaning = self.cleaning_config()
        schema = c["input"]["schema"]
        full_hash = stage_hash("predict", {"upstream": manifest["config_hash"],
                                           "input_sha256": file_digest(input_path),
                                           "batch_size": c["predict"]["batch_size"]})

        def body(d: Path) -> dict:
            items, rejects = read_texts(input_path, schema["id"] or "id", schema["text"], c["input"]["format"])
            token_lists, flags = [], []
            for _, text in items:
                norm = normalize_text(text, cleaning)
                flags.append(is_cyrillic_dominant(norm, cleaning.latin_ratio_threshold))
                token_lists.append(filter_tokens(tokenize(norm), cleaning))
            ds = EncodedDataset.from_tokens(token_lists, np.zeros(len(items), dtype=np.int64), vocab, seq_len,
                                            classes)
            probs = np.mean([m.predict_proba(ds.ids, c["predict"]["batch_size"]).astype(np.float64)
                             for _, m, _ in models], axis=0) if items else np.zeros((0, len(classes)))
            lines = []
            for (ident, _), p, cyr in zip(items, probs, flags):
                lines.append(canonical_json({"id": ident, "class": classes[int(p.argmax())],
                                             "probabilities": [round(float(v), 8) for v in p],
                                             "cyrillic": bool(cyr)}) + "\n")
            (d / "predictions.jsonl").write_text("".join(lines), encoding="utf-8")
            write_rejects(d / "rejects.jsonl", rejects)
            return {"upstream": {"train": manifest["config_hash"]}, "classes": classes,
                    "input_sha256": file_digest(input_path), "predicted": len(items),
                    "rejected": len(rejects), "ensemble_size": len(models)}

        final = self._run_stage("predict", body, full_hash)
        if output:
            shutil.copyfile(final / "predictions.jsonl", output)
        return final

    # -- report ----------------------------------------------------------------------
    def report(self) -> Path:
        prep_dir, prep = self.require("prepare")

        def body(d: Path) -> dict:
            records = [json.loads(line) for line in
                       (prep_dir / "records.jsonl").read_text(encoding="utf-8").splitlines()]
            examples = [json.loads(line) for line in
                        (prep_dir / "examples.jsonl").read_text(encoding="utf-8").splitlines()]
            tables = {
                "type": Counter(r["type"] for r in records),
                "agency": Counter(r["agency"] or "(none)" for r in records),
                "class": Counter(e["label"] for e in examples),
            }
            with open(d / "distribution.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("dimension", "label", "count", "share", "percent"))
                for dim, counter in tables.items():
                    total = sum(counter.values())
                    for label, n in sorted(counter.items(), key=lambda kv: (-kv[1], kv[0])):
                        w.writerow((dim, label, n, f"{n / total:.6f}", f"{100 * n / total:.2f}"))
            return {"upstream": {"prepare": prep["config_hash"]},
                    "totals": {k: sum(v.values()) for k, v in tables.items()}}

        return self._run_stage("report", body)


def _write_confusion(path: Path, cm: np.ndarray, classes: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\predicted"] + classes)
        for name, row in zip(classes, cm):
            w.writerow([name] + [int(v) for v in row])
