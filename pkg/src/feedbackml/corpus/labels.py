"""Task labels: emotion aggregation and class-balanced subsampling."""
from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ..errors import DataError
from .records import FeedbackType


class EmotionLabel(str, Enum):
    NEUTRAL = "neutral"
    NEGATIVE = "negative"
    EXCLUDED = "excluded"


_EMOTION = {
    FeedbackType.CRITICISM: EmotionLabel.NEGATIVE,
    FeedbackType.COMPLAINT: EmotionLabel.NEGATIVE,
    FeedbackType.COMMENT: EmotionLabel.NEUTRAL,
    FeedbackType.REQUEST: EmotionLabel.NEUTRAL,
    FeedbackType.COMPLIMENT: EmotionLabel.EXCLUDED,
}


def map_emotion_label(feedback_type: FeedbackType | str) -> EmotionLabel:
    """criticism/complaint -> negative, comment/request -> neutral, compliment -> excluded."""
    if not isinstance(feedback_type, FeedbackType):
        feedback_type = FeedbackType.parse(feedback_type)
    return _EMOTION[feedback_type]


@dataclass
class LabeledTokens:
    id: str
    tokens: list[str]
    label: str
    meta: dict = field(default_factory=dict)


def balance_subsample(records: Sequence, per_class: int, max_tokens: int, seed: int,
                      classes: Iterable[str] | None = None) -> list:
    """Draw up to ``per_class`` records per label among those with at most
    ``max_tokens`` tokens.

    Works on anything exposing ``.label`` and ``.tokens``. The selection is
    a seeded draw without replacement; output keeps the input order.
    """
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    by_class: dict[str, list[int]] = defaultdict(list)
    present = []
    for idx, rec in enumerate(records):
        if rec.label == EmotionLabel.EXCLUDED.value:
            continue
        if rec.label not in present:
            present.append(rec.label)
        if len(rec.tokens) <= max_tokens:
            by_class[rec.label].append(idx)
    wanted = sorted(classes) if classes is not None else sorted(present)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for label in wanted:
        pool = by_class.get(label, [])
        if not pool:
            raise DataError(f"class {label!r} has no records with <= {max_tokens} tokens")
        if len(pool) < per_class:
            warnings.warn(f"class {label!r}: only {len(pool)} eligible records, wanted {per_class}; taking all",
                          stacklevel=2)
            chosen.extend(pool)
        else:
            pick = rng.choice(len(pool), size=per_class, replace=False)
            chosen.extend(pool[i] for i in pick)
    return [records[i] for i in sorted(chosen)]
