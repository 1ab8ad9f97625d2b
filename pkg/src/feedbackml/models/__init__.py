"""CNN and BiLSTM text classifiers on top of tensorcore."""
from .base import Model, glorot_uniform, param_count
from .bilstm import BiLstmClassifier, BiLstmConfig, build_bilstm
from .checkpoint import build_model, load_checkpoint, read_checkpoint, save_checkpoint
from .cnn import CnnClassifier, CnnConfig, build_cnn

__all__ = [
    "Model", "param_count", "glorot_uniform",
    "CnnConfig", "CnnClassifier", "build_cnn",
    "BiLstmConfig", "BiLstmClassifier", "build_bilstm",
    "build_model", "save_checkpoint", "load_checkpoint", "read_checkpoint",
]
