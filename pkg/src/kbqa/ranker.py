"""Candidate (subject, predicate) generation and joint scoring.

The joint score of a pair is ``P(p|q) * P(s|q)`` where the subject prior is
the mention's index frequency for ``s`` normalized over retained subjects.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .predicate_models.common import mask_entity
from .spanner import predict_mention
from .surface_index import DEFAULT_MAX_NGRAM

DEFAULT_K_SUBJECTS = 400


@dataclass(frozen=True)
class CandidatePair:
    subject: str
    predicate: str
    subject_prior: float
    predicate_prob: float
    score: float

    @classmethod
    def make(cls, subject, predicate, prior, prob):
        return cls(subject, predicate, prior, prob, prior * prob)


@dataclass
class RankedAnswer:
    question: str
    mention: str | None = None
    pairs: list = field(default_factory=list)
    objects: list = field(default_factory=list)

    @property
    def best(self):
        return self.pairs[0] if self.pairs else None

    @property
    def empty(self):
        return not self.pairs

    def to_json(self, top_n=10):
        best = self.best
        return json.dumps({
            "question": self.question,
            "status": "ok" if best else "no_prediction",
            "mention": self.mention,
            "subject": best.subject if best else None,
            "predicate": best.predicate if best else None,
            "objects": self.objects,
            "candidates": [asdict(p) for p in self.pairs[:top_n]],
        }, ensure_ascii=False, sort_keys=True)


@dataclass
class RankerConfig:
    k_subjects: int = DEFAULT_K_SUBJECTS
    max_ngram: int = DEFAULT_MAX_NGRAM
    top_n: int = 10


def retained_subjects(mention, index, k_subjects=DEFAULT_K_SUBJECTS):
    """S(m): the top ``k_subjects`` index entries for the mention as ``(uri, frequency)``."""
    if not mention:
        return []
    return index.lookup(mention)[:k_subjects]


def candidate_pairs(mention, index, graph, k_subjects=DEFAULT_K_SUBJECTS):
    """C(m) in subject-rank order, predicates sorted within a subject."""
    return [(s, p) for s, _ in retained_subjects(mention, index, k_subjects)
            for p in sorted(graph.predicates_of(s))]


def subject_prior(subjects):
    """Normalize ``(uri, frequency)`` pairs into ``uri -> probability``."""
    total = sum(f for _, f in subjects)
    return {s: f / total for s, f in subjects} if total else {}


def _rank_key(pair):
    return (-pair.score, -pair.subject_prior, pair.predicate, pair.subject)


def score_and_rank(question, mention, model, candidates, priors):
    """Score ``candidates`` with ``model`` and sort best-first.

    ``question`` is the raw question; it is masked with ``mention`` here.
    Predicates outside the model's support score 0.
    """
    answer = RankedAnswer(question, mention)
    if not candidates:
        return answer
    text, _ = mask_entity(question, mention)
    dist = model.predicate_probabilities(text, sorted({p for _, p in candidates}))
    pairs = [CandidatePair.make(s, p, priors[s], dist.get(p, 0.0)) for s, p in candidates]
    answer.pairs = sorted(pairs, key=_rank_key)
    return answer


def answer_question(question, ner_model, predicate_model, index, graph, config=None):
    """Full pipeline: mention, candidates, scoring, and the answer objects."""
    config = config or RankerConfig()
    mention = predict_mention(ner_model, question, index, config.max_ngram)
    if mention is None:
        return RankedAnswer(question)
    subjects = retained_subjects(mention, index, config.k_subjects)
    cands = candidate_pairs(mention, index, graph, config.k_subjects)
    answer = score_and_rank(question, mention, predicate_model, cands, subject_prior(subjects))
    if answer.best:
        answer.objects = sorted(graph.objects_of(answer.best.subject, answer.best.predicate))
    return answer

