"""Weakly-supervised subject span recognition.

Training spans come from matching question n-grams against the surface index
(the first n-gram whose lookup contains the gold subject). An IO tagger
(word + char-CNN + case features into a BiLSTM, sigmoid per token) learns
those spans; at prediction time its output is snapped to the closest
index-matching n-gram by edit distance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import numcore as nc
from .data import tokenize
from .features import TokenEncoder, Vocabulary
from .modelio import load_model, save_model
from .numcore import ops
from .surface_index import DEFAULT_MAX_NGRAM, extract_ngrams, normalize_surface

log = logging.getLogger(__name__)

INSIDE, OUTSIDE = "I", "O"


class SpanError(ValueError):
    pass


@dataclass
class SpanAnnotation:
    tokens: list
    labels: list
    span: tuple | None = None

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ValueError("labels and tokens differ in length")


def merge_io(labels):
    """Inclusive ``(start, end)`` of the first maximal run of I labels, or None."""
    start = None
    for i, lab in enumerate(labels):
        if lab == INSIDE and start is None:
            start = i
        elif lab != INSIDE and start is not None:
            return (start, i - 1)
    return (start, len(labels) - 1) if start is not None else None


def find_span(question, gold_uri, index, m=DEFAULT_MAX_NGRAM):
    """First n-gram (longest first, then leftmost) whose index lookup contains ``gold_uri``."""
    for gram in extract_ngrams(question, m):
        if any(uri == gold_uri for uri, _ in index.lookup(gram)):
            return gram
    return None


def _locate(tokens, mention_tokens):
    n = len(mention_tokens)
    for i in range(len(tokens) - n + 1):
        if tokens[i:i + n] == mention_tokens:
            return i
    return None


def label_tokens(question, mention):
    tokens = normalize_surface(question).split()
    mtoks = normalize_surface(mention).split()
    start = _locate(tokens, mtoks) if mtoks else None
    if start is None:
        raise SpanError(f"mention {mention!r} is not a contiguous span of {question!r}")
    end = start + len(mtoks) - 1
    labels = [INSIDE if start <= i <= end else OUTSIDE for i in range(len(tokens))]
    return SpanAnnotation(tokens, labels, (start, end))


def levenshtein(a, b):
    """Unit-cost insert/delete/substitute edit distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


@dataclass
class NerConfig:
    epochs: int = 15
    word_dim: int = 100
    char_dim: int = 100
    char_widths: tuple = (2, 3, 4)
    case_dim: int = 4
    lstm_size: int = 300
    lr: float = 1e-3
    optimizer: str = "adam"
    max_ngram: int = DEFAULT_MAX_NGRAM
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "char_widths" in d:
            d["char_widths"] = tuple(d["char_widths"])
        return cls(**d)


class NerModel:
    def __init__(self, config, vocab, vectors=None):
        self.config = config
        self.vocab = vocab
        self.params = nc.Params(config.seed)
        self.encoder = TokenEncoder(self.params, "ner.enc", vocab, config.word_dim, config.char_dim,
                                    config.char_widths, case_dim=config.case_dim, vectors=vectors)
        self.bilstm = nc.BiLSTM(self.params, "ner.bilstm", self.encoder.out_dim, config.lstm_size)
        self.out_w = self.params.add("ner.out.weight", (self.bilstm.out_dim,), fan=(self.bilstm.out_dim, 1))
        self.out_b = self.params.add("ner.out.bias", (1,), init="zeros")

    def logits(self, pairs):
        hidden, _, _ = self.bilstm(self.encoder(pairs))
        return ops.add(ops.matmul(hidden, self.out_w), self.out_b)

    def probabilities(self, question):
        pairs = tokenize(question)
        if not pairs:
            return pairs, np.zeros(0)
        z = self.logits(pairs).data
        return pairs, 1.0 / (1.0 + np.exp(-z))

    def tag(self, question):
        pairs, probs = self.probabilities(question)
        labels = [INSIDE if p > 0.5 else OUTSIDE for p in probs]
        return SpanAnnotation([n for _, n in pairs], labels, merge_io(labels))

    def save(self, path):
        save_model(path, "ner", self.params, self.config, vocab=self.vocab.itos)

    @classmethod
    def load(cls, path):
        meta, tensors = load_model(path, "ner")
        vocab = Vocabulary.from_itos(meta["vocab"])
        model = cls(NerConfig.from_dict(meta["config"]), vocab)
        model.params.load_state(tensors)
        return model


@dataclass
class NerTrainingResult:
    model: NerModel
    log: list = field(default_factory=list)
    skipped: int = 0
    used: int = 0


def weak_labels(records, index, m):
    """(pairs, labels) per record with an inferred span; returns them and the skip count."""
    examples = []
    skipped = 0
    for rec in records:
        mention = find_span(rec.question, rec.subject, index, m)
        if mention is None:
            skipped += 1
            continue
        ann = label_tokens(rec.question, mention)
        examples.append((tokenize(rec.question), np.array([1.0 if l == INSIDE else 0.0 for l in ann.labels])))
    return examples, skipped


def train_ner(records, index, config=None, vectors=None):
    config = config or NerConfig()
    if not records:
        raise ValueError("train_ner needs a non-empty dataset")
    examples, skipped = weak_labels(records, index, config.max_ngram)
    log.info("weak supervision: %d spans inferred, %d records skipped", len(examples), skipped)
    if not examples:
        raise ValueError("no training record has an index-matching span")
    vocab = Vocabulary.build([[n for _, n in pairs] for pairs, _ in examples])
    model = NerModel(config, vocab, vectors)
    params = list(model.params)
    opt = nc.make_optimizer(config.optimizer, params, config.lr)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        total, correct, count = 0.0, 0, 0
        for i in rng.permutation(len(examples)):
            pairs, target = examples[i]
            opt.zero_grad()
            z = model.logits(pairs)
            loss = ops.scale(nc.binary_cross_entropy_with_logits(z, target), 1.0 / len(target))
            nc.backward(loss)
            opt.step()
            total += loss.item()
            correct += int(np.sum((z.data > 0) == (target > 0.5)))
            count += len(target)
        history.append({"epoch": epoch, "loss": total / len(examples), "accuracy": correct / count})
        log.info("ner epoch %d loss %.4f token acc %.4f", epoch, history[-1]["loss"], history[-1]["accuracy"])
    return NerTrainingResult(model, history, skipped, len(examples))


def token_accuracy(model, records, index, m=DEFAULT_MAX_NGRAM):
    examples, _ = weak_labels(records, index, m)
    correct = total = 0
    for pairs, target in examples:
        z = model.logits(pairs).data
        correct += int(np.sum((z > 0) == (target > 0.5)))
        total += len(target)
    return correct / total if total else 0.0


def snap_to_index(raw_span, question, index, m=DEFAULT_MAX_NGRAM):
    """Closest index-matching n-gram to ``raw_span``; ties go to the longer, then leftmost."""
    best = None
    best_d = None
    for gram in extract_ngrams(question, m):
        if not index.lookup(gram):
            continue
        d = levenshtein(raw_span, gram)
        if best_d is None or d < best_d:
            best, best_d = gram, d
    return best


def predict_mention(model, question, index, m=DEFAULT_MAX_NGRAM):
    ann = model.tag(question)
    if ann.span is None:
        return None
    start, end = ann.span
    raw = " ".join(ann.tokens[start:end + 1])
    return snap_to_index(raw, question, index, m)

