"""Minimal dense-tensor and reverse-mode differentiation core."""

from . import checkpoint
from . import tensor as ops
from .layers import (
    ALPHABET_SIZE,
    BiLSTM,
    CharCNN,
    Dense,
    Embedding,
    LSTM,
    Params,
    bilstm_encode,
    char_cnn_encode,
    dense,
    one_hot_chars,
)
from .losses import (
    binary_cross_entropy_with_logits,
    cosine_similarity,
    cross_entropy_with_logits,
    loss,
)
from .optim import SGD, Adam, make_optimizer
from .tensor import GraphError, Tensor, backward, softmax, sigmoid

__all__ = [
    "ALPHABET_SIZE", "Adam", "BiLSTM", "CharCNN", "Dense", "Embedding", "GraphError",
    "LSTM", "Params", "SGD", "Tensor", "backward", "bilstm_encode",
    "binary_cross_entropy_with_logits", "char_cnn_encode", "checkpoint",
    "cosine_similarity", "cross_entropy_with_logits", "dense", "gradcheck", "loss",
    "make_optimizer", "one_hot_chars", "ops", "sigmoid", "softmax",
]


def gradcheck(build_loss, params, eps=1e-4, floor=1e-6):
    """Max relative error between backward() and central finite differences.

    ``build_loss`` runs a fresh forward pass and returns a scalar Tensor.
    Relative error per element is ``|a - n| / max(|a|, |n|, floor)``.
    """
    import numpy as np

    loss_ = build_loss()
    backward(loss_, params=params)
    worst = 0.0
    for p in params:
        analytic = p.grad.copy()
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = build_loss().item()
            flat[i] = old - eps
            down = build_loss().item()
            flat[i] = old
            numeric = (up - down) / (2 * eps)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    return worst
