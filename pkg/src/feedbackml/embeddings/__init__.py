"""Word vectors: CBOW training, ``.vec`` I/O and projection onto a vocabulary."""
from .matrix import EmbeddingMatrix, cosine, coverage, nearest_neighbors, project_to_vocab
from .vecio import load_binary, load_vec, save_binary, save_vec
from .word2vec import (
    CbowTrainer,
    Word2VecConfig,
    negative_sampling_grads,
    negative_sampling_loss,
    train_word2vec_cbow,
)

__all__ = [
    "EmbeddingMatrix", "cosine", "coverage", "nearest_neighbors", "project_to_vocab",
    "load_binary", "load_vec", "save_binary", "save_vec",
    "CbowTrainer", "Word2VecConfig", "negative_sampling_grads", "negative_sampling_loss",
    "train_word2vec_cbow",
]
