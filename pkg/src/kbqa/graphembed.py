"""Role-specific KB embeddings learned by treating triple completion as classification.

Each triple ``(s, p, o)`` yields two samples: predict ``s#s`` from
``{p#s, o#o}`` and predict ``o#o`` from ``{p#o, s#s}``. A linear model scores
``sigmoid(u_target . mean(v_inputs))`` and is trained with negative sampling;
the input-side vectors ``v`` are exported as the embedding table.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kbstore import DataError
from .spanner import levenshtein
from .surface_index import NAME_PREDICATES

log = logging.getLogger(__name__)

SUBJECT, OBJECT = "s", "o"


@dataclass(frozen=True, order=True)
class RoleToken:
    uri: str
    role: str

    def __post_init__(self):
        if self.role not in (SUBJECT, OBJECT):
            raise ValueError(f"role must be 's' or 'o', got {self.role!r}")

    def __str__(self):
        return f"{self.uri}#{self.role}"

    @classmethod
    def parse(cls, text):
        uri, sep, role = text.rpartition("#")
        if not sep:
            raise ValueError(f"{text!r} has no role suffix")
        return cls(uri, role)


@dataclass(frozen=True)
class TripleSample:
    target: RoleToken
    inputs: tuple

    def fasttext_line(self):
        return "__label__" + str(self.target) + " " + " ".join(str(t) for t in self.inputs)


def generate_samples(triple):
    s, p, o = triple.subject, triple.predicate, triple.object
    return [
        TripleSample(RoleToken(s, SUBJECT), (RoleToken(p, SUBJECT), RoleToken(o, OBJECT))),
        TripleSample(RoleToken(o, OBJECT), (RoleToken(p, OBJECT), RoleToken(s, SUBJECT))),
    ]


@dataclass
class EmbedConfig:
    dim: int = 200
    epochs: int = 5
    negatives: int = 5
    lr: float = 0.05
    seed: int = 0
    noise_power: float = 0.75
    skip_predicates: frozenset = NAME_PREDICATES

    def validate(self):
        if self.dim <= 0:
            raise ValueError("embedding dim must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.negatives < 0:
            raise ValueError("negatives must be non-negative")


class EmbeddingTable:
    def __init__(self, dim, vectors=None):
        self.dim = dim
        self.vectors = dict(vectors or {})

    def __contains__(self, token):
        return str(token) in self.vectors

    def __getitem__(self, token):
        return self.vectors[str(token)]

    def __len__(self):
        return len(self.vectors)

    def __eq__(self, other):
        return (isinstance(other, EmbeddingTable) and self.dim == other.dim
                and self.vectors.keys() == other.vectors.keys()
                and all(np.array_equal(v, other.vectors[k]) for k, v in self.vectors.items()))

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{len(self.vectors)} {self.dim}\n")
            for tok in sorted(self.vectors):
                fh.write(tok + " " + " ".join(repr(float(x)) for x in self.vectors[tok]) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            try:
                count, dim = int(header[0]), int(header[1])
            except (IndexError, ValueError):
                raise DataError(f"{path}: bad embedding header") from None
            vectors = {}
            for lineno, line in enumerate(fh, 2):
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise DataError(f"{path}:{lineno}: expected {dim} components")
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        if len(vectors) != count:
            raise DataError(f"{path}: header says {count} vectors, found {len(vectors)}")
        return cls(dim, vectors)


class _Vocab:
    def __init__(self):
        self.index = {}
        self.items = []
        self.counts = []

    def add(self, tok):
        i = self.index.get(tok)
        if i is None:
            i = self.index[tok] = len(self.items)
            self.items.append(tok)
            self.counts.append(0)
        self.counts[i] += 1
        return i


def _log_sigmoid(z):
    return min(z, 0.0) - np.log1p(np.exp(-abs(z)))


class NegativeSamplingTrainer:
    """fastText-style supervised training with a negative-sampling output layer."""

    def __init__(self, samples, config):
        config.validate()
        self.config = config
        self.inputs = _Vocab()
        self.labels = _Vocab()
        self.data = []
        for smp in samples:
            self.data.append((self.labels.add(str(smp.target)),
                              [self.inputs.add(str(t)) for t in smp.inputs]))
        rng = np.random.default_rng(config.seed)
        limit = 1.0 / config.dim
        self.v = rng.uniform(-limit, limit, size=(len(self.inputs.items), config.dim))
        self.u = np.zeros((len(self.labels.items), config.dim))
        noise = np.asarray(self.labels.counts, dtype=np.float64) ** config.noise_power
        self.noise_cdf = np.cumsum(noise / noise.sum()) if len(noise) else noise
        self.rng = rng

    def _negatives(self, target):
        out = []
        n_labels = len(self.labels.items)
        if n_labels < 2:
            return out
        while len(out) < self.config.negatives:
            j = int(np.searchsorted(self.noise_cdf, self.rng.random(), side="right"))
            j = min(j, n_labels - 1)
            if j != target:
                out.append(j)
        return out

    def sample_loss(self, target, inputs, negatives):
        h = self.v[inputs].mean(axis=0)
        loss = -_log_sigmoid(float(self.u[target] @ h))
        for j in negatives:
            loss -= _log_sigmoid(-float(self.u[j] @ h))
        return loss

    def step(self, target, inputs, negatives, lr):
        h = self.v[inputs].mean(axis=0)
        grad = np.zeros_like(h)
        loss = 0.0
        for j, label in [(target, 1.0)] + [(n, 0.0) for n in negatives]:
            z = float(self.u[j] @ h)
            score = 1.0 / (1.0 + np.exp(-z))
            alpha = lr * (label - score)
            grad += alpha * self.u[j]
            self.u[j] += alpha * h
            loss -= _log_sigmoid(z if label else -z)
        for i in inputs:
            self.v[i] += grad / len(inputs)
        return loss

    def train(self):
        cfg = self.config
        total_steps = max(1, cfg.epochs * len(self.data))
        step = 0
        history = []
        for epoch in range(1, cfg.epochs + 1):
            total = 0.0
            for k in self.rng.permutation(len(self.data)):
                target, inputs = self.data[k]
                lr = cfg.lr * (1.0 - step / total_steps)
                total += self.step(target, inputs, self._negatives(target), lr)
                step += 1
            history.append({"epoch": epoch, "loss": total / max(1, len(self.data)), "accuracy": float("nan")})
            log.info("kb-embed epoch %d loss %.4f", epoch, history[-1]["loss"])
        return history

    def table(self):
        return EmbeddingTable(self.config.dim, {tok: self.v[i].copy() for i, tok in enumerate(self.inputs.items)})


def relation_predicates(graph, skip_predicates=NAME_PREDICATES):
    """KB predicates that receive embeddings (name/alias predicates excluded)."""
    return [p for p in graph.predicates if p not in skip_predicates]


def kb_samples(graph, skip_predicates=NAME_PREDICATES):
    out = []
    for t in graph.triples:
        if t.predicate not in skip_predicates:
            out.extend(generate_samples(t))
    return out


def train_embeddings(graph, config=None, return_trainer=False):
    config = config or EmbedConfig()
    config.validate()
    samples = kb_samples(graph, config.skip_predicates)
    if not samples:
        raise ValueError("no triples to embed")
    trainer = NegativeSamplingTrainer(samples, config)
    history = trainer.train()
    table = trainer.table()
    table.history = history
    return (table, trainer) if return_trainer else table


def predicate_embedding(table, uri, role=SUBJECT):
    key = str(RoleToken(uri, role))
    if key in table.vectors:
        return table.vectors[key]
    known = sorted({RoleToken.parse(k).uri for k in table.vectors if k.endswith("#" + role)})
    nearest = sorted(known, key=lambda k: (levenshtein(k, uri), k))[:3]
    raise KeyError(f"no {role}-role embedding for {uri!r}; nearest known: {nearest}")
