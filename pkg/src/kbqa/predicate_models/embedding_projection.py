"""Model 2: project the question into the KB embedding space.

The network emits a vector trained towards the gold predicate's pre-trained
(subject-role) embedding under a cosine loss. Prediction compares that
vector with every KB predicate, maps cosine to ``(cos + 1) / 2`` and
L1-normalizes, so predicates never seen in training still get mass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..features import Vocabulary
from ..graphembed import SUBJECT, EmbeddingTable, predicate_embedding
from ..modelio import load_model, save_model
from .common import PredicateDistribution, config_from_dict, epoch_row, question_pairs
from .encoder import SequenceEncoder, token_layer

log = logging.getLogger(__name__)


@dataclass
class M2Config:
    epochs: int = 100
    word_dim: int = 100
    char_dim: int = 100
    char_widths: tuple = (2, 3, 4)
    lstm_size: int = 400
    output_dim: int = 200
    lr: float = 1e-3
    optimizer: str = "adam"
    role: str = SUBJECT
    seed: int = 0
    embedding_path: str = ""


def predicate_matrix(table, predicates, role=SUBJECT):
    """Stack role vectors for ``predicates``; any missing one is a hard error."""
    missing = [p for p in predicates if f"{p}#{role}" not in table.vectors]
    if missing:
        raise KeyError(f"embedding table lacks {len(missing)} KB predicates, e.g. {missing[:3]}")
    return np.stack([predicate_embedding(table, p, role) for p in predicates])


def cosine_distribution(vector, matrix, predicates):
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(vector)
    cos = (matrix @ vector) / np.where(norms == 0, 1.0, norms)
    shifted = (cos + 1.0) / 2.0
    total = shifted.sum()
    probs = shifted / total if total > 0 else np.full(len(predicates), 1.0 / len(predicates))
    return PredicateDistribution.from_scores(predicates, probs)


class ProjectionModel:
    kind = "m2"

    def __init__(self, config, vocab, table, kb_predicates, vectors=None):
        if table.dim != config.output_dim:
            raise ValueError(f"embedding dim {table.dim} != model output dim {config.output_dim}")
        self.config = config
        self.vocab = vocab
        self.kb_predicates = list(kb_predicates)
        self.targets = predicate_matrix(table, self.kb_predicates, config.role)
        self.table = table
        self.params = nc.Params(config.seed)
        tokens = token_layer(self.params, "m2.tok", vocab, config, vectors)
        self.encoder = SequenceEncoder(self.params, "m2.enc", tokens, config.lstm_size)
        self.out = nc.Dense(self.params, "m2.out", self.encoder.out_dim, config.output_dim)

    def project(self, text):
        return self.out(self.encoder(question_pairs(text)))

    def predict(self, text, kb_predicates=None):
        vec = self.project(text).data
        if kb_predicates is None:
            return cosine_distribution(vec, self.targets, self.kb_predicates)
        preds = list(kb_predicates)
        return cosine_distribution(vec, predicate_matrix(self.table, preds, self.config.role), preds)

    def predicate_probabilities(self, text, candidates=None):
        return self.predict(text)

    def save(self, path):
        save_model(path, self.kind, self.params, self.config,
                   vocab=self.vocab.itos, kb_predicates=self.kb_predicates)

    @classmethod
    def load(cls, path, table=None, kb_predicates=None):
        meta, tensors = load_model(path, cls.kind)
        config = config_from_dict(M2Config, meta["config"])
        if table is None:
            table = EmbeddingTable.load(config.embedding_path)
        model = cls(config, Vocabulary.from_itos(meta["vocab"]), table,
                    kb_predicates if kb_predicates is not None else meta["kb_predicates"])
        model.params.load_state(tensors)
        return model


def train_m2(pairs, table, kb_predicates, config=None, vectors=None):
    config = config or M2Config(output_dim=table.dim)
    if not pairs:
        raise ValueError("m2 needs training data")
    vocab = Vocabulary.build([[n for _, n in question_pairs(t)] for t, _ in pairs])
    model = ProjectionModel(config, vocab, table, kb_predicates, vectors)
    gold_vecs = {p: predicate_embedding(table, p, config.role) for p in sorted({p for _, p in pairs})}
    opt = nc.make_optimizer(config.optimizer, list(model.params), config.lr)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        total, correct = 0.0, 0
        for i in rng.permutation(len(pairs)):
            text, gold = pairs[i]
            opt.zero_grad()
            out = model.project(text)
            loss = nc.loss("cosine", out, gold_vecs[gold])
            nc.backward(loss)
            opt.step()
            total += loss.item()
            dist = cosine_distribution(out.data, model.targets, model.kb_predicates)
            correct += int(dist.top(1)[0][0] == gold)
        history.append(epoch_row(epoch, total, correct, len(pairs)))
        log.debug("m2 epoch %d %s", epoch, history[-1])
    return model, history
