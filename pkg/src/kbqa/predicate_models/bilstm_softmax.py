"""Model 1: BiLSTM question encoder with a softmax over training predicates."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..features import Vocabulary
from ..modelio import load_model, save_model
from .common import (
    PredicateDistribution,
    PredicateVocabulary,
    config_from_dict,
    epoch_row,
    question_pairs,
)
from .encoder import SequenceEncoder, token_layer

log = logging.getLogger(__name__)


@dataclass
class M1Config:
    epochs: int = 100
    word_dim: int = 100
    char_dim: int = 100
    char_widths: tuple = (2, 3, 4)
    lstm_size: int = 200
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0


class SoftmaxModel:
    kind = "m1"

    def __init__(self, config, vocab, predicates, vectors=None):
        self.config = config
        self.vocab = vocab
        self.predicates = predicates
        self.params = nc.Params(config.seed)
        tokens = token_layer(self.params, "m1.tok", vocab, config, vectors)
        self.encoder = SequenceEncoder(self.params, "m1.enc", tokens, config.lstm_size)
        self.out = nc.Dense(self.params, "m1.out", self.encoder.out_dim, len(predicates))

    def logits(self, text):
        return self.out(self.encoder(question_pairs(text)))

    def predict(self, text):
        probs = nc.softmax(self.logits(text)).data
        return PredicateDistribution.from_scores(self.predicates.items, probs)

    def predicate_probabilities(self, text, candidates=None):
        return self.predict(text)

    def save(self, path):
        save_model(path, self.kind, self.params, self.config,
                   vocab=self.vocab.itos, predicates=self.predicates.items)

    @classmethod
    def load(cls, path):
        meta, tensors = load_model(path, cls.kind)
        model = cls(config_from_dict(M1Config, meta["config"]), Vocabulary.from_itos(meta["vocab"]),
                    PredicateVocabulary(meta["predicates"]))
        model.params.load_state(tensors)
        return model


def train_m1(pairs, config=None, vectors=None):
    """Train on ``(masked question, gold predicate)`` pairs; returns ``(model, log)``."""
    config = config or M1Config()
    if not pairs:
        raise ValueError("m1 needs training data")
    predicates = PredicateVocabulary(sorted({p for _, p in pairs}))
    vocab = Vocabulary.build([[n for _, n in question_pairs(t)] for t, _ in pairs])
    model = SoftmaxModel(config, vocab, predicates, vectors)
    opt = nc.make_optimizer(config.optimizer, list(model.params), config.lr)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        total, correct = 0.0, 0
        for i in rng.permutation(len(pairs)):
            text, gold = pairs[i]
            target = predicates.index[gold]
            opt.zero_grad()
            logits = model.logits(text)
            loss = nc.cross_entropy_with_logits(logits, target)
            nc.backward(loss)
            opt.step()
            total += loss.item()
            correct += int(np.argmax(logits.data) == target)
        history.append(epoch_row(epoch, total, correct, len(pairs)))
        log.debug("m1 epoch %d %s", epoch, history[-1])
    return model, history
