"""Predicate prediction models.

Each model turns a masked question into a :class:`PredicateDistribution`.
The ``m*_train`` helpers accept dataset records plus a surface index and do
the weakly-supervised masking themselves; the classes and ``train_m*``
functions work on already-masked text.
"""

from __future__ import annotations

from ..surface_index import DEFAULT_MAX_NGRAM
from ..spanner import find_span
from .bilstm_softmax import M1Config, SoftmaxModel, train_m1
from .common import (
    PLACEHOLDER,
    PredicateDistribution,
    PredicateVocabulary,
    mask_entity,
    tokenize_predicate_uri,
    training_pairs,
)
from .embedding_projection import M2Config, ProjectionModel, cosine_distribution, train_m2
from .ngram_classifier import M4Config, NgramClassifier, extract_features, train_m4
from .pair_scorer import M3Config, PairScorer, sample_negatives, train_m3

CONFIGS = {"m1": M1Config, "m2": M2Config, "m3": M3Config, "m4": M4Config}
MODELS = {"m1": SoftmaxModel, "m2": ProjectionModel, "m3": PairScorer, "m4": NgramClassifier}


def m1_train(records, index, config=None, vectors=None, m=DEFAULT_MAX_NGRAM):
    return train_m1(training_pairs(records, index, m), config, vectors)


def m1_predict(model, masked_question):
    return model.predict(masked_question)


def m2_train(records, index, table, kb_predicates, config=None, vectors=None, m=DEFAULT_MAX_NGRAM):
    return train_m2(training_pairs(records, index, m), table, kb_predicates, config, vectors)


def m2_predict(model, masked_question, kb_predicates=None):
    return model.predict(masked_question, kb_predicates)


def m3_examples(records, index, m=DEFAULT_MAX_NGRAM):
    pairs = training_pairs(records, index, m)
    return [(text, pred, r.subject) for (text, pred), r in zip(pairs, records)]


def m3_train(records, index, graph, config=None, vectors=None, m=DEFAULT_MAX_NGRAM):
    return train_m3(m3_examples(records, index, m), graph, config, vectors)


def m3_score(model, masked_question, predicate):
    return model.score(masked_question, predicate)


def m4_train(records, index, config=None, m=DEFAULT_MAX_NGRAM):
    return train_m4(training_pairs(records, index, m), config)


def m4_predict(model, masked_question):
    return model.predict(masked_question)


def mask_with_index(question, subject, index, m=DEFAULT_MAX_NGRAM):
    """Mask using the weakly-supervised span for a known gold subject."""
    span = find_span(question, subject, index, m)
    return mask_entity(question, span) if span else (question, False)


__all__ = [
    "CONFIGS", "M1Config", "M2Config", "M3Config", "M4Config", "MODELS", "NgramClassifier",
    "PLACEHOLDER", "PairScorer", "PredicateDistribution", "PredicateVocabulary",
    "ProjectionModel", "SoftmaxModel", "cosine_distribution", "extract_features",
    "m1_predict", "m1_train", "m2_predict", "m2_train", "m3_examples", "m3_score", "m3_train",
    "m4_predict", "m4_train", "mask_entity", "mask_with_index", "sample_negatives",
    "tokenize_predicate_uri", "train_m1", "train_m2", "train_m3", "train_m4", "training_pairs",
]
