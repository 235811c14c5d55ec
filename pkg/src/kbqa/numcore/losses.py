from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


def cosine_similarity(a, b):
    na = np.linalg.norm(a.data)
    nb = np.linalg.norm(b.data if isinstance(b, Tensor) else b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero-norm vector")
    b = T.as_tensor(b)
    dot = T.sum(T.mul(a, b))
    norms = T.sqrt(T.mul(T.sum(T.mul(a, a)), T.sum(T.mul(b, b))))
    return T.mul(dot, T.reciprocal(norms))


def loss(kind, prediction, target):
    """Scalar loss of ``kind`` between a prediction and its target.

    * ``cross_entropy``: ``prediction`` is a probability vector, ``target`` a class index.
    * ``binary_cross_entropy``: ``prediction`` is a probability, ``target`` 0 or 1.
    * ``cosine``: ``1 - cos(prediction, target)`` for two vectors.
    """
    if kind == "cross_entropy":
        if prediction.ndim != 1 or not 0 <= int(target) < prediction.shape[0]:
            raise ValueError(f"cross_entropy: bad target {target} for shape {prediction.shape}")
        return T.neg(T.log(prediction[int(target)]))
    if kind == "binary_cross_entropy":
        y = float(target)
        p = T.reshape(prediction, ())
        return T.neg(T.add(T.scale(T.log(p), y), T.scale(T.log(T.sub(1.0, p)), 1.0 - y)))
    if kind == "cosine":
        target = T.as_tensor(target)
        if prediction.shape != target.shape:
            raise ValueError(f"cosine: shape {prediction.shape} vs {target.shape}")
        return T.sub(1.0, cosine_similarity(prediction, target))
    raise ValueError(f"unknown loss kind {kind!r}")


def cross_entropy_with_logits(logits, target):
    return T.neg(T.log_softmax(logits)[int(target)])


def binary_cross_entropy_with_logits(logit, target, weight=None):
    """``-[y log σ(z) + (1-y) log(1-σ(z))]`` summed over elements, stable in ``z``.

    ``weight`` optionally scales each element's term.
    """
    y = np.asarray(target, dtype=np.float64)
    pos = T.mul(T.log_sigmoid(logit), y)
    negv = T.mul(T.log_sigmoid(T.neg(logit)), 1.0 - y)
    terms = T.add(pos, negv)
    if weight is not None:
        terms = T.mul(terms, np.asarray(weight, dtype=np.float64))
    return T.neg(T.sum(terms))
