"""Synthetic Cyrillic-like corpora for tests, demos and smoke runs.

The real citizen-feedback export is not public, so these generators build
corpora with known structure: templated sentences where two tokens are
interchangeable, and keyword-separable two-class feedback.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

CONSONANTS = "бвгджзклмнпрстхцчш"
VOWELS = "аэиоуөүы"


def pseudo_words(n: int, seed: int = 0, syllables=(2, 3)) -> list[str]:
    """``n`` distinct pronounceable Cyrillic pseudo-words."""
    rng = np.random.default_rng(seed)
    words: list[str] = []
    seen = set()
    while len(words) < n:
        k = int(rng.integers(syllables[0], syllables[1] + 1))
        w = "".join(CONSONANTS[rng.integers(len(CONSONANTS))] + VOWELS[rng.integers(len(VOWELS))]
                    for _ in range(k))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def templated_corpus(n_sentences: int = 3000, seed: int = 0, pair=("х1", "х2"),
                     n_groups: int = 25, group_size: int = 8, sentence_len: int = 9):
    """Sentences drawn from topical word groups.

    One group also contains a slot filled by either token of ``pair`` at
    random, so the two tokens see identical context distributions.
    Returns ``(sentences, groups)``.
    """
    rng = np.random.default_rng(seed)
    vocab = pseudo_words(n_groups * group_size, seed=seed + 101)
    groups = [vocab[g * group_size:(g + 1) * group_size] for g in range(n_groups)]
    sentences = []
    for _ in range(n_sentences):
        g = int(rng.integers(n_groups))
        words = list(rng.choice(groups[g], size=sentence_len))
        if g == 0:
            words[int(rng.integers(sentence_len))] = pair[int(rng.integers(2))]
        sentences.append([str(w) for w in words])
    return sentences, groups


def keyword_feedback(n_docs: int = 2000, seed: int = 0, n_filler: int = 300, n_keywords: int = 12,
                     doc_len=(6, 16), keywords_per_doc=(1, 3), latin_docs: int = 0,
                     compliments: int = 0) -> list[dict]:
    """Two-class feedback rows whose class is fixed by class-specific keywords.

    Rows carry ``id``, ``text``, ``type`` and ``agency``; half use negative
    types (complaint/criticism), half neutral ones (request/comment).
    Optional fully-Latin rows and compliments exercise the cleaning and
    label-exclusion paths.
    """
    rng = np.random.default_rng(seed)
    words = pseudo_words(n_filler + 2 * n_keywords, seed=seed + 7)
    filler, kw_neg, kw_neu = words[:n_filler], words[n_filler:n_filler + n_keywords], words[n_filler + n_keywords:]
    agencies = [f"agency_{k:02d}" for k in range(6)]
    punct = ["", "", "!", "?", ",", "."]
    rows = []
    for i in range(n_docs):
        negative = i % 2 == 0
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        tokens = [str(w) for w in rng.choice(filler, size=length)]
        n_kw = int(rng.integers(keywords_per_doc[0], keywords_per_doc[1] + 1))
        for _ in range(n_kw):
            kw = str(rng.choice(kw_neg if negative else kw_neu))
            tokens.insert(int(rng.integers(len(tokens) + 1)), kw)
        text = " ".join(t + punct[int(rng.integers(len(punct)))] for t in tokens)
        if rng.random() < 0.3:
            text = text.capitalize()
        ftype = ("complaint", "criticism")[i % 4 // 2] if negative else ("request", "comment")[i % 4 // 2]
        rows.append({"id": f"d{i:05d}", "text": text, "type": ftype, "agency": str(rng.choice(agencies))})
    latin = ["hello", "please", "fix", "road", "water", "thanks", "city", "bus"]
    for j in range(latin_docs):
        text = " ".join(rng.choice(latin, size=6))
        rows.append({"id": f"l{j:04d}", "text": text, "type": "request", "agency": agencies[0]})
    for j in range(compliments):
        text = " ".join(str(w) for w in rng.choice(filler, size=8))
        rows.append({"id": f"c{j:04d}", "text": text, "type": "compliment", "agency": agencies[1]})
    order = rng.permutation(len(rows))
    return [rows[k] for k in order]


def write_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["id", "text", "type", "agency"])
        writer.writeheader()
        writer.writerows(rows)
    return path


def separable_sequences(n: int = 64, n_classes: int = 4, vocab_size: int = 50, length: int = 20,
                        seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Integer id sequences where class ``c`` always contains marker id ``2 + c``.

    Marker ids never appear as filler, so every class is separable from a
    single token. Returns ``(ids, labels)`` with PAD-free rows.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    filler_ids = np.arange(2 + n_classes, vocab_size)
    ids = rng.choice(filler_ids, size=(n, length))
    for row, c in enumerate(labels):
        ids[row, rng.integers(length)] = 2 + c
    return ids.astype(np.int32), labels.astype(np.int64)
