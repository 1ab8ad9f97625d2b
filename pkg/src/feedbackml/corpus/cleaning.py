"""Text normalisation, Latin-script filtering and token filtering."""
from __future__ import annotations

import string
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from ..errors import ConfigError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

DEFAULT_STRIP_CHARS = frozenset(string.punctuation + "«»“”„‘’‚–—…№•·¡¿")


def load_token_list(path) -> frozenset[str]:
    """One token per line, UTF-8; blank lines and ``#`` comments are skipped."""
    tokens = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            tokens.add(line)
    return frozenset(tokens)


def _packaged_list(name: str) -> frozenset[str]:
    with resources.as_file(resources.files("feedbackml.data") / name) as p:
        return load_token_list(p)


def default_stopwords() -> frozenset[str]:
    return _packaged_list("stopwords_mn.txt")


def default_noise_tokens() -> frozenset[str]:
    return _packaged_list("noise_tokens_mn.txt")


@dataclass
class CleaningConfig:
    stopwords: frozenset[str] = frozenset()
    noise_tokens: frozenset[str] = frozenset()
    strip_chars: frozenset[str] = DEFAULT_STRIP_CHARS
    latin_ratio_threshold: float = 0.5
    lowercase: bool = True
    _table: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.stopwords = frozenset(self.stopwords)
        self.noise_tokens = frozenset(self.noise_tokens)
        self.strip_chars = frozenset(self.strip_chars)
        if not 0.0 <= self.latin_ratio_threshold <= 1.0:
            raise ConfigError(f"latin_ratio_threshold must be in [0, 1], got {self.latin_ratio_threshold}")
        reserved = {PAD_TOKEN, UNK_TOKEN} & (self.stopwords | self.noise_tokens)
        if reserved:
            raise ConfigError(f"stopword/noise lists must not contain reserved tokens {sorted(reserved)}")
        if any(len(ch) != 1 for ch in self.strip_chars):
            raise ConfigError("strip_chars must be single characters")
        self._table = {ord(ch): " " for ch in self.strip_chars}

    @classmethod
    def default(cls, **overrides) -> "CleaningConfig":
        """Packaged Mongolian stopword and noise-token lists."""
        overrides.setdefault("stopwords", default_stopwords())
        overrides.setdefault("noise_tokens", default_noise_tokens())
        return cls(**overrides)

    @property
    def removed_tokens(self) -> frozenset[str]:
        return self.stopwords | self.noise_tokens


def normalize_text(raw: str, config: CleaningConfig) -> str:
    """Lowercase, blank out noise characters, collapse whitespace.

    Noise characters become spaces rather than vanishing so that
    "сайн,байна" still splits into two words.
    """
    text = raw.lower() if config.lowercase else raw
    text = text.translate(config._table)
    return " ".join(text.split())


def _is_cyrillic(ch: str) -> bool:
    return unicodedata.name(ch, "").startswith("CYRILLIC")


def cyrillic_ratio(text: str) -> float | None:
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return None
    return sum(map(_is_cyrillic, letters)) / len(letters)


def is_cyrillic_dominant(text: str, threshold: float = 0.5) -> bool:
    ratio = cyrillic_ratio(text)
    return ratio is not None and ratio >= threshold


def tokenize(text: str) -> list[str]:
    return text.split()


def filter_tokens(tokens: Iterable[str], config: CleaningConfig) -> list[str]:
    removed = config.removed_tokens
    return [t for t in tokens if t not in removed]


def clean_tokens(raw: str, config: CleaningConfig) -> list[str] | None:
    """Full per-record path; ``None`` means the text failed the Latin filter."""
    text = normalize_text(raw, config)
    if not is_cyrillic_dominant(text, config.latin_ratio_threshold):
        return None
    return filter_tokens(tokenize(text), config)
