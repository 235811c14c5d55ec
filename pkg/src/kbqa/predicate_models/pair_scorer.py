"""Model 3: binary compatibility score for a (question, predicate) pair.

Question and predicate-URI tokens share the word/char embedding layer but
run through separate 2-layer BiLSTMs. Their final states are concatenated
and scored by a tanh hidden layer and a sigmoid output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..features import Vocabulary
from ..modelio import load_model, save_model
from ..numcore import ops
from .common import (
    PredicateDistribution,
    PredicateVocabulary,
    config_from_dict,
    epoch_row,
    question_pairs,
    tokenize_predicate_uri,
)
from .encoder import SequenceEncoder, token_layer

log = logging.getLogger(__name__)


@dataclass
class M3Config:
    epochs: int = 100
    word_dim: int = 100
    char_dim: int = 100
    char_widths: tuple = (2, 3, 4)
    lstm_size: int = 400
    layers: int = 2
    hidden: int = 100
    negatives: int = 10
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0


def predicate_pairs(uri):
    toks = tokenize_predicate_uri(uri) or [uri]
    return [(t, t) for t in toks]


class PairScorer:
    kind = "m3"

    def __init__(self, config, vocab, predicates, vectors=None):
        self.config = config
        self.vocab = vocab
        self.predicates = predicates
        self.params = nc.Params(config.seed)
        tokens = token_layer(self.params, "m3.tok", vocab, config, vectors)
        self.q_enc = SequenceEncoder(self.params, "m3.q", tokens, config.lstm_size, config.layers)
        self.p_enc = SequenceEncoder(self.params, "m3.p", tokens, config.lstm_size, config.layers)
        self.hidden = nc.Dense(self.params, "m3.hidden", self.q_enc.out_dim + self.p_enc.out_dim,
                               config.hidden)
        self.out = nc.Dense(self.params, "m3.out", config.hidden, 1)

    def encode_question(self, text):
        return self.q_enc(question_pairs(text))

    def encode_predicate(self, uri):
        return self.p_enc(predicate_pairs(uri))

    def logit(self, q_vec, p_vec):
        h = ops.tanh(self.hidden(ops.concat([q_vec, p_vec])))
        return ops.reshape(self.out(h), ())

    def scores(self, text, predicates):
        q = self.encode_question(text)
        out = {}
        for p in predicates:
            if p not in out:
                z = self.logit(q, self.encode_predicate(p)).item()
                out[p] = 1.0 / (1.0 + np.exp(-z))
        return out

    def score(self, text, predicate):
        return self.scores(text, [predicate])[predicate]

    def predicate_probabilities(self, text, candidates):
        """Sigmoid scores normalized over the distinct candidate predicates."""
        cands = sorted(set(candidates))
        if not cands:
            return PredicateDistribution()
        raw = self.scores(text, cands)
        total = sum(raw.values())
        if total <= 0:
            return PredicateDistribution.from_scores(cands, [1.0 / len(cands)] * len(cands))
        return PredicateDistribution.from_scores(cands, [raw[p] / total for p in cands])

    def save(self, path):
        save_model(path, self.kind, self.params, self.config,
                   vocab=self.vocab.itos, predicates=self.predicates.items)

    @classmethod
    def load(cls, path):
        meta, tensors = load_model(path, cls.kind)
        model = cls(config_from_dict(M3Config, meta["config"]), Vocabulary.from_itos(meta["vocab"]),
                    PredicateVocabulary(meta["predicates"]))
        model.params.load_state(tensors)
        return model


def sample_negatives(gold, subject_predicates, vocabulary, k, rng):
    """Up to ``k`` distinct negatives: half from the subject's other predicates, the rest uniform."""
    hard = sorted(set(subject_predicates) - {gold})
    n_hard = min(len(hard), k // 2)
    chosen = [hard[i] for i in rng.permutation(len(hard))[:n_hard]] if n_hard else []
    pool = [p for p in vocabulary.items if p != gold and p not in chosen]
    n_easy = min(len(pool), k - len(chosen))
    chosen += [pool[i] for i in rng.permutation(len(pool))[:n_easy]] if n_easy else []
    return chosen


def train_m3(examples, graph, config=None, vectors=None):
    """``examples`` are ``(masked question, gold predicate, gold subject)`` triples."""
    config = config or M3Config()
    if not examples:
        raise ValueError("m3 needs training data")
    predicates = PredicateVocabulary(sorted({p for _, p, _ in examples}))
    token_lists = [[n for _, n in question_pairs(t)] for t, _, _ in examples]
    extra = {tok for p in graph.predicates for tok in tokenize_predicate_uri(p)}
    vocab = Vocabulary.build(token_lists, extra=extra)
    model = PairScorer(config, vocab, predicates, vectors)
    opt = nc.make_optimizer(config.optimizer, list(model.params), config.lr)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        total, correct = 0.0, 0
        for i in rng.permutation(len(examples)):
            text, gold, subject = examples[i]
            negs = sample_negatives(gold, graph.predicates_of(subject), predicates, config.negatives, rng)
            cands = [gold] + negs
            labels = np.array([1.0] + [0.0] * len(negs))
            # the positive carries as much weight as all negatives together
            weights = np.array([float(max(1, len(negs)))] + [1.0] * len(negs))
            opt.zero_grad()
            q = model.encode_question(text)
            logits = ops.stack([model.logit(q, model.encode_predicate(p)) for p in cands])
            loss = ops.scale(nc.binary_cross_entropy_with_logits(logits, labels, weights), 1.0 / weights.sum())
            nc.backward(loss)
            opt.step()
            total += loss.item()
            correct += int(np.all(logits.data[0] > logits.data[1:]))
        history.append(epoch_row(epoch, total, correct, len(examples)))
        log.debug("m3 epoch %d %s", epoch, history[-1])
    return model, history
