from __future__ import annotations

import logging
import re
from dataclasses import fields

import numpy as np

from ..data import tokenize
from ..spanner import find_span
from ..surface_index import DEFAULT_MAX_NGRAM, normalize_surface

log = logging.getLogger(__name__)

PLACEHOLDER = "e"


def mask_entity(question, mention):
    """Replace the mention's tokens with the placeholder ``e``.

    Returns ``(text, found)``; when the mention does not occur the question
    comes back unchanged with ``found=False``.
    """
    tokens = normalize_surface(question).split()
    mtoks = normalize_surface(mention or "").split()
    n = len(mtoks)
    if n:
        for i in range(len(tokens) - n + 1):
            if tokens[i:i + n] == mtoks:
                return " ".join(tokens[:i] + [PLACEHOLDER] + tokens[i + n:]), True
    log.debug("mention %r not found in %r", mention, question)
    return question, False


def tokenize_predicate_uri(uri):
    return [t.lower() for t in re.split(r"[._]", uri) if t]


def question_pairs(text):
    """Token pairs for a (masked) question; never empty."""
    return tokenize(text) or [(PLACEHOLDER, PLACEHOLDER)]


class PredicateVocabulary:
    def __init__(self, predicates=()):
        self.items = []
        self.index = {}
        for p in predicates:
            if p not in self.index:
                self.index[p] = len(self.items)
                self.items.append(p)

    def __len__(self):
        return len(self.items)

    def __contains__(self, p):
        return p in self.index

    def __iter__(self):
        return iter(self.items)

    @classmethod
    def from_records(cls, records):
        return cls(sorted({r.predicate for r in records}))


class PredicateDistribution(dict):
    """``predicate -> probability`` over a model's support."""

    @classmethod
    def from_scores(cls, predicates, probs):
        return cls(zip(predicates, (float(p) for p in probs)))

    def prob(self, predicate):
        return self.get(predicate, 0.0)

    def top(self, k=1):
        return sorted(self.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    def is_valid(self, tol=1e-6):
        vals = np.fromiter(self.values(), dtype=np.float64)
        return bool(len(vals)) and np.all(vals >= 0) and np.all(vals <= 1) and abs(vals.sum() - 1.0) <= tol


def training_pairs(records, index, m=DEFAULT_MAX_NGRAM):
    """(masked question, gold predicate) using the weakly-supervised span."""
    out = []
    unmasked = 0
    for r in records:
        span = find_span(r.question, r.subject, index, m)
        text, found = mask_entity(r.question, span) if span else (r.question, False)
        unmasked += not found
        out.append((text, r.predicate))
    if unmasked:
        log.info("%d of %d training questions left unmasked (no index span)", unmasked, len(records))
    return out


def config_from_dict(cls, d):
    names = {f.name for f in fields(cls)}
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items() if k in names}
    return cls(**kwargs)


def epoch_row(epoch, loss, correct, n):
    return {"epoch": epoch, "loss": loss / max(1, n), "accuracy": correct / max(1, n)}
