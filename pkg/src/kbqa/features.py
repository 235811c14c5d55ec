"""Vocabulary and the word + character (+ case) token encoder used by the neural models."""

from __future__ import annotations

import numpy as np

from . import numcore as nc
from .numcore import ops
from .data import case_feature

UNK = "<unk>"


class Vocabulary:
    def __init__(self, tokens=()):
        self.itos = [UNK]
        self.stoi = {UNK: 0}
        for t in tokens:
            self.add(t)

    def add(self, token):
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    def ids(self, tokens):
        return [self.stoi.get(t, 0) for t in tokens]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    @classmethod
    def from_itos(cls, itos):
        """Rebuild from a saved ``itos`` list (UNK first)."""
        return cls(itos[1:])

    @classmethod
    def build(cls, token_lists, extra=()):
        vocab = cls()
        for toks in token_lists:
            for t in toks:
                vocab.add(t)
        for t in sorted(extra):
            vocab.add(t)
        return vocab


def embedding_init(vocab, dim, vectors, rng):
    """Uniform init, overwritten by pre-trained vectors where available."""
    limit = np.sqrt(3.0 / dim)
    table = rng.uniform(-limit, limit, size=(len(vocab), dim))
    if vectors:
        for tok, i in vocab.stoi.items():
            vec = vectors.get(tok)
            if vec is not None and len(vec) == dim:
                table[i] = vec
    return table


class TokenEncoder:
    """Per-token features: word embedding, char-CNN, and optionally a case embedding."""

    def __init__(self, params, name, vocab, word_dim, char_dim, widths=(2, 3, 4),
                 case_dim=0, vectors=None):
        self.vocab = vocab
        init = embedding_init(vocab, word_dim, vectors, params.rng(f"{name}.word"))
        self.word = nc.Embedding(params, f"{name}.word", len(vocab), word_dim, init=init)
        self.chars = nc.CharCNN(params, f"{name}.char", char_dim, widths)
        self.case = nc.Embedding(params, f"{name}.case", 3, case_dim) if case_dim else None
        self.out_dim = word_dim + char_dim + case_dim

    def __call__(self, pairs):
        """Encode ``(raw, normalized)`` token pairs into a (T, out_dim) tensor."""
        parts = [self.word(self.vocab.ids([n for _, n in pairs])), self.chars([r for r, _ in pairs])]
        if self.case is not None:
            parts.append(self.case([case_feature(r) for r, _ in pairs]))
        return ops.concat(parts, axis=1)
