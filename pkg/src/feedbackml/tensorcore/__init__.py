"""Minimal dense-tensor library with reverse-mode differentiation."""
from .gradcheck import check_gradients, numerical_gradient, relative_error
from .ops import (
    activation,
    conv1d,
    cross_entropy_loss,
    dense,
    dropout,
    embedding_lookup,
    global_max_pool1d,
    softmax,
    spatial_dropout1d,
)
from .recurrent import bilstm_layer, lstm_cell_step, lstm_layer
from .tensor import (
    Tensor,
    backward,
    get_default_dtype,
    parameter,
    precision,
    set_default_dtype,
    topological_order,
)

__all__ = [
    "Tensor", "backward", "parameter", "precision", "get_default_dtype", "set_default_dtype",
    "topological_order", "activation", "conv1d", "cross_entropy_loss", "dense", "dropout",
    "embedding_lookup", "global_max_pool1d", "softmax", "spatial_dropout1d",
    "bilstm_layer", "lstm_cell_step", "lstm_layer",
    "check_gradients", "numerical_gradient", "relative_error",
]
