"""Feedback ingestion, cleaning, vocabularies and encoded datasets."""
from .cleaning import (
    DEFAULT_STRIP_CHARS,
    PAD_TOKEN,
    UNK_TOKEN,
    CleaningConfig,
    clean_tokens,
    cyrillic_ratio,
    default_noise_tokens,
    default_stopwords,
    filter_tokens,
    is_cyrillic_dominant,
    load_token_list,
    normalize_text,
    tokenize,
)
from .labels import EmotionLabel, LabeledTokens, balance_subsample, map_emotion_label
from .records import (
    FeedbackRecord,
    FeedbackType,
    Reject,
    ingest,
    ingest_csv,
    ingest_jsonl,
    read_texts,
    write_rejects,
)
from .vocab import (
    PAD_ID,
    UNK_ID,
    EncodedDataset,
    EncodedExample,
    Vocabulary,
    build_vocabulary,
    encode_example,
    encode_sequence,
)

__all__ = [
    "DEFAULT_STRIP_CHARS", "PAD_TOKEN", "UNK_TOKEN", "PAD_ID", "UNK_ID",
    "CleaningConfig", "clean_tokens", "cyrillic_ratio", "default_noise_tokens", "default_stopwords",
    "filter_tokens", "is_cyrillic_dominant", "load_token_list", "normalize_text", "tokenize",
    "EmotionLabel", "LabeledTokens", "balance_subsample", "map_emotion_label",
    "FeedbackRecord", "FeedbackType", "Reject", "ingest", "ingest_csv", "ingest_jsonl", "read_texts", "write_rejects",
    "EncodedDataset", "EncodedExample", "Vocabulary", "build_vocabulary", "encode_example", "encode_sequence",
]
