"""
CBOW word vectors from a templated corpus
=========================================

Two tokens that appear in exactly the same contexts should end up close
together. We train CBOW with negative sampling and compare their cosine
against random pairs.
"""
import numpy as np

from feedbackml.embeddings import Word2VecConfig, nearest_neighbors, save_vec, load_vec, train_word2vec_cbow
from feedbackml.synthetic import templated_corpus

sentences, groups = templated_corpus(3000, seed=0)
print(len(sentences), "sentences, e.g.", " ".join(sentences[0]))

vocab, matrix = train_word2vec_cbow(sentences, Word2VecConfig(dim=32, window=4, negatives=5, epochs=5, seed=0))
print(matrix)

# Neighbours of х1 come from the topical group it shares with х2.
print(nearest_neighbors(vocab.id_to_token, matrix, "х1", k=3))

unit = matrix.values / np.linalg.norm(matrix.values, axis=1, keepdims=True).clip(1e-12)
rng = np.random.default_rng(1)
pairs = rng.integers(2, len(vocab), size=(1000, 2))
random_cos = np.einsum("ij,ij->i", unit[pairs[:, 0]], unit[pairs[:, 1]])
pair_cos = unit[vocab.token_to_id["х1"]] @ unit[vocab.token_to_id["х2"]]
print(f"pair cosine {pair_cos:.3f}, 90th percentile of random pairs {np.percentile(random_cos, 90):.3f}")

# Vectors persist in the plain-text .vec format.
save_vec("demo_vectors.vec", vocab.id_to_token, matrix)
tokens, back = load_vec("demo_vectors.vec")
print("round trip identical:", tokens == vocab.id_to_token and np.allclose(back.values, matrix.values))
