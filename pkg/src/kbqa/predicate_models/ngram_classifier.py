"""Model 4: fastText-style linear classifier over hashed bag-of-n-gram features.

Features are word unigrams, word bigrams and character 5-grams of each
``<word>``, hashed (FNV-1a) into a fixed number of buckets. Only buckets seen
during training own an embedding row; unseen buckets are ignored at
prediction time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..modelio import load_model, save_model
from ..numcore import ops
from ..surface_index import normalize_surface
from .common import PredicateDistribution, PredicateVocabulary, config_from_dict, epoch_row

log = logging.getLogger(__name__)

FNV_OFFSET = 2166136261
FNV_PRIME = 16777619


def fnv1a(text):
    h = FNV_OFFSET
    for b in text.encode("utf-8"):
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFF
    return h


@dataclass
class M4Config:
    epochs: int = 50
    hidden: int = 100
    word_ngrams: int = 2
    char_ngram: int = 5
    buckets: int = 2 ** 21
    lr: float = 0.5
    seed: int = 0


def extract_features(text, word_ngrams=2, char_ngram=5):
    """String features of a question: ``w:``, ``n:`` (word n-grams) and ``c:`` (char n-grams)."""
    words = normalize_surface(text).split()
    feats = [f"w:{w}" for w in words]
    for n in range(2, word_ngrams + 1):
        feats += [f"n:{' '.join(words[i:i + n])}" for i in range(len(words) - n + 1)]
    if char_ngram > 0:
        for w in words:
            bounded = f"<{w}>"
            feats += [f"c:{bounded[i:i + char_ngram]}" for i in range(len(bounded) - char_ngram + 1)]
    return feats


class NgramClassifier:
    kind = "m4"

    def __init__(self, config, predicates, buckets):
        self.config = config
        self.predicates = predicates
        self.rows = {b: i for i, b in enumerate(buckets)}
        self.params = nc.Params(config.seed)
        self.input = self.params.add("m4.input", (max(1, len(buckets)), config.hidden), init="uniform")
        self.output = self.params.add("m4.output", (len(predicates), config.hidden), init="zeros")

    def buckets(self, text):
        c = self.config
        return [fnv1a(f) % c.buckets for f in extract_features(text, c.word_ngrams, c.char_ngram)]

    def row_ids(self, text):
        return [self.rows[b] for b in self.buckets(text) if b in self.rows]

    def logits(self, ids):
        if not ids:
            return nc.Tensor(np.zeros(len(self.predicates)))
        hidden = ops.mean(ops.take_rows(self.input, ids), axis=0)
        return ops.matmul(self.output, hidden)

    def predict(self, text):
        probs = nc.softmax(self.logits(self.row_ids(text))).data
        return PredicateDistribution.from_scores(self.predicates.items, probs)

    def predicate_probabilities(self, text, candidates=None):
        return self.predict(text)

    def save(self, path):
        ordered = sorted(self.rows, key=self.rows.get)
        save_model(path, self.kind, self.params, self.config,
                   predicates=self.predicates.items, buckets=ordered)

    @classmethod
    def load(cls, path):
        meta, tensors = load_model(path, cls.kind)
        model = cls(config_from_dict(M4Config, meta["config"]), PredicateVocabulary(meta["predicates"]),
                    meta["buckets"])
        model.params.load_state(tensors)
        return model


def train_m4(pairs, config=None):
    """SGD with a linearly decaying learning rate and a full softmax."""
    config = config or M4Config()
    if not pairs:
        raise ValueError("m4 needs training data")
    predicates = PredicateVocabulary(sorted({p for _, p in pairs}))
    probe = NgramClassifier(config, predicates, [])
    seen = []
    known = set()
    for text, _ in pairs:
        for b in probe.buckets(text):
            if b not in known:
                known.add(b)
                seen.append(b)
    model = NgramClassifier(config, predicates, seen)
    encoded = [(model.row_ids(t), predicates.index[p]) for t, p in pairs]
    opt = nc.SGD(list(model.params), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    total_steps = max(1, config.epochs * len(pairs))
    step = 0
    history = []
    for epoch in range(1, config.epochs + 1):
        total, correct = 0.0, 0
        for i in rng.permutation(len(encoded)):
            ids, target = encoded[i]
            opt.lr = config.lr * (1.0 - step / total_steps)
            opt.zero_grad()
            logits = model.logits(ids)
            loss = nc.cross_entropy_with_logits(logits, target)
            nc.backward(loss)
            opt.step()
            step += 1
            total += loss.item()
            correct += int(np.argmax(logits.data) == target)
        history.append(epoch_row(epoch, total, correct, len(pairs)))
        log.debug("m4 epoch %d %s", epoch, history[-1])
    return model, history
