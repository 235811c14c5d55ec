from __future__ import annotations

from .. import numcore as nc
from ..features import TokenEncoder
from ..numcore import ops


class SequenceEncoder:
    """Token features into a BiLSTM; returns the concatenated final states."""

    def __init__(self, params, name, tokens, lstm_size, layers=1):
        self.tokens = tokens
        self.bilstm = nc.BiLSTM(params, f"{name}.bilstm", tokens.out_dim, lstm_size, layers=layers)
        self.out_dim = 2 * lstm_size

    def __call__(self, pairs):
        _, last_fwd, last_bwd = self.bilstm(self.tokens(pairs))
        return ops.concat([last_fwd, last_bwd])


def token_layer(params, name, vocab, config, vectors=None):
    return TokenEncoder(params, name, vocab, config.word_dim, config.char_dim, config.char_widths,
                        vectors=vectors)
