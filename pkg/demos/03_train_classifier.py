"""
Training a CNN classifier with the library API
==============================================

Clean synthetic feedback, map it to emotion labels, encode it, train a
small CNN with early stopping and score the held-out partition.
"""
import numpy as np

from feedbackml.corpus import (CleaningConfig, EncodedDataset, build_vocabulary, clean_tokens,
                               encode_sequence, map_emotion_label)
from feedbackml.embeddings import Word2VecConfig, project_to_vocab, train_word2vec_cbow
from feedbackml.models import CnnConfig, build_cnn, param_count
from feedbackml.synthetic import keyword_feedback
from feedbackml.training import TrainConfig, compute_metrics, split_indices, train_model

rows = keyword_feedback(600, seed=0, compliments=20)
cleaning = CleaningConfig.default()

# Compliments carry no emotion label and are dropped.
docs, labels = [], []
for row in rows:
    label = map_emotion_label(row["type"]).value
    tokens = clean_tokens(row["text"], cleaning)
    if label != "excluded" and tokens:
        docs.append(tokens)
        labels.append(label)
classes = sorted(set(labels))
y = np.array([classes.index(label) for label in labels])
print(len(docs), "documents,", dict(zip(classes, np.bincount(y).tolist())))

seq_len = 20
vocab = build_vocabulary(docs)
ids = np.stack([encode_sequence(d, vocab, seq_len) for d in docs])
data = EncodedDataset(ids, y, np.minimum([len(d) for d in docs], seq_len), classes)

# Word vectors trained on the same documents, projected onto the vocabulary.
w2v_vocab, w2v = train_word2vec_cbow(docs, Word2VecConfig(dim=16, epochs=3, seed=0))
embedding = project_to_vocab(w2v_vocab.id_to_token, w2v, vocab, seed=0)

train_idx, val_idx, test_idx = split_indices(y, (0.7, 0.1, 0.2), seed=0)
config = CnnConfig(len(vocab), len(classes), dim=16, seq_len=seq_len, conv1_filters=16, conv1_kernel=3,
                   conv2_filters=16, conv2_kernel=2, dense_units=16)
model = build_cnn(config, embedding, seed=0)
print("trainable parameters (without embedding):", param_count(model))

model, history = train_model(model, data.subset(train_idx), data.subset(val_idx),
                             TrainConfig(max_epochs=20, patience=3, seed=0))
print("best epoch", history.best_epoch, "of", len(history.rows))

test = data.subset(test_idx)
pred = model.predict_proba(test.ids).argmax(axis=1)
metrics = compute_metrics(test.labels, pred, len(classes))
print(f"test accuracy {metrics.accuracy:.3f}, macro F1 {metrics.f1_macro:.3f}")
print(metrics.confusion_matrix)
