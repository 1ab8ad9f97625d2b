"""
Reverse-mode differentiation on numpy arrays
============================================

Build a tiny graph, backpropagate, then confirm the gradients with
central finite differences in 64-bit mode.
"""
import numpy as np

from feedbackml import tensorcore as tc
from feedbackml.tensorcore import parameter, precision

rng = np.random.default_rng(0)

# Tensors wrap numpy arrays; parameters are leaves that collect gradients.
x = parameter(rng.normal(size=(4, 3)), "x")
w = parameter(rng.normal(size=(3, 5)), "w")
b = parameter(np.zeros(5), "b")
labels = np.array([0, 2, 4, 1])

probs = tc.dense(x, w, b, kind="softmax")
loss = tc.cross_entropy_loss(probs, labels)
grads = tc.backward(loss, [w, b])
print("loss", float(loss.data))
print("dL/db", np.round(grads[1], 4))

# Gradient checks need float64, otherwise round-off swamps the difference quotient.
with precision(np.float64):
    x = parameter(rng.normal(size=(2, 7, 3)), "x")
    kernels = parameter(rng.normal(size=(4, 3, 3)), "kernels")

    def pooled_loss():
        feats = tc.global_max_pool1d(tc.conv1d(x, kernels, kind="relu"))
        return tc.cross_entropy_loss(tc.softmax(feats), np.array([1, 3]))

    print("worst relative error per parameter:", tc.check_gradients(pooled_loss, [x, kernels]))

# A bidirectional LSTM returns both directions' final states side by side.
with precision(np.float64):
    seq = parameter(rng.normal(size=(2, 6, 3)), "seq")
    fwd = [parameter(rng.normal(scale=0.3, size=s), n) for s, n in (((3, 8), "W"), ((2, 8), "U"), ((8,), "b"))]
    bwd = [parameter(rng.normal(scale=0.3, size=s), n) for s, n in (((3, 8), "W"), ((2, 8), "U"), ((8,), "b"))]
    out = tc.bilstm_layer(seq, fwd, bwd)
    print("bilstm output shape", out.shape)
