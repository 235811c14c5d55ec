"""Parameter store and the layers shared by every neural model."""

from __future__ import annotations

import zlib

import numpy as np

from . import tensor as T
from .tensor import Tensor

PAD_CHAR = 0
UNK_CHAR = 1
ALPHABET = [chr(c) for c in range(32, 127)]
CHAR_INDEX = {ch: i + 2 for i, ch in enumerate(ALPHABET)}
ALPHABET_SIZE = len(ALPHABET) + 2


def char_ids(token):
    """Map a token to alphabet indices; characters outside printable ASCII become UNK."""
    return [CHAR_INDEX.get(ch, UNK_CHAR) for ch in token]


def one_hot_chars(token):
    ids = char_ids(token)
    m = np.zeros((len(ids), ALPHABET_SIZE))
    m[np.arange(len(ids)), ids] = 1.0
    return m


class Params:
    """Named, seeded collection of trainable tensors.

    Each tensor is initialised from an RNG keyed on ``(seed, name)`` so that
    re-creating a model with the same seed reproduces its parameters exactly,
    regardless of registration order.
    """

    def __init__(self, seed=0):
        self.seed = int(seed)
        self.tensors = {}

    def rng(self, name):
        return np.random.default_rng([self.seed, zlib.crc32(name.encode("utf-8"))])

    def add(self, name, shape, init="glorot", fan=None):
        if name in self.tensors:
            raise KeyError(f"parameter {name!r} registered twice")
        shape = tuple(shape)
        if isinstance(init, np.ndarray):
            if init.shape != shape:
                raise ValueError(f"{name}: init array {init.shape} != {shape}")
            data = init.astype(np.float64).copy()
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "glorot":
            fan_in, fan_out = fan if fan is not None else (shape[0], shape[-1])
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            data = self.rng(name).uniform(-limit, limit, size=shape)
        elif init == "uniform":
            limit = 1.0 / shape[-1]
            data = self.rng(name).uniform(-limit, limit, size=shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        t = Tensor(data, requires_grad=True, name=name)
        self.tensors[name] = t
        return t

    def __getitem__(self, name):
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors.values())

    def __len__(self):
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def state(self):
        return {k: v.data.copy() for k, v in self.tensors.items()}

    def load_state(self, arrays):
        missing = set(self.tensors) - set(arrays)
        if missing:
            raise KeyError(f"checkpoint lacks parameters: {sorted(missing)}")
        for name, t in self.tensors.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise ValueError(f"{name}: checkpoint shape {arr.shape} != {t.shape}")
            t.data = arr.copy()


def dense(x, weight, bias):
    """``weight @ x + bias`` for a 1-D input; ``weight`` is (out, in)."""
    if x.ndim != 1 or x.shape[0] != weight.shape[1]:
        raise ValueError(f"dense: input shape {x.shape} does not fit weight shape {weight.shape}")
    return T.add(T.matmul(weight, x), bias)


class Dense:
    def __init__(self, params, name, n_in, n_out):
        self.weight = params.add(f"{name}.weight", (n_out, n_in), fan=(n_in, n_out))
        self.bias = params.add(f"{name}.bias", (n_out,), init="zeros")

    def __call__(self, x):
        return dense(x, self.weight, self.bias)


class Embedding:
    def __init__(self, params, name, n_rows, dim, init=None):
        self.table = params.add(f"{name}.table", (n_rows, dim),
                                init=init if init is not None else "glorot")

    def __call__(self, ids):
        return T.take_rows(self.table, ids)


def split_width(total, parts):
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def char_windows(one_hot, width):
    """All length-``width`` windows of a (L, A) one-hot matrix, flattened.

    Matrices shorter than ``width`` are right-padded with zero rows.
    """
    L, A = one_hot.shape
    if L < width:
        one_hot = np.vstack([one_hot, np.zeros((width - L, A))])
        L = width
    n = L - width + 1
    idx = np.arange(n)[:, None] + np.arange(width)[None, :]
    return one_hot[idx].reshape(n, width * A)


class CharCNN:
    """Character convolution with several kernel widths and max-pooling over positions.

    The output width ``dim`` is split across kernel widths; pooled responses
    are concatenated in kernel-width order.
    """

    def __init__(self, params, name, dim, widths=(2, 3, 4)):
        self.widths = tuple(widths)
        self.filters = split_width(dim, len(self.widths))
        self.dim = dim
        self.kernels = []
        for w, f in zip(self.widths, self.filters):
            # one-hot input: only w rows of the kernel are active per window
            k = params.add(f"{name}.k{w}", (w * ALPHABET_SIZE, f), fan=(w, f))
            b = params.add(f"{name}.b{w}", (f,), init="zeros")
            self.kernels.append((w, k, b))

    def encode_matrix(self, one_hot):
        """Encode one token given its (L, A) one-hot character matrix."""
        if one_hot.shape[0] == 0:
            raise ValueError("char_cnn_encode needs at least one character")
        return self._encode([one_hot])[0]

    def __call__(self, tokens):
        """Encode a list of token strings into a (len(tokens), dim) tensor."""
        return self._encode([one_hot_chars(t if t else " ") for t in tokens])

    def _encode(self, matrices):
        pooled = []
        for w, k, b in self.kernels:
            wins = [char_windows(m, w) for m in matrices]
            lengths = [x.shape[0] for x in wins]
            conv = T.add(T.matmul(Tensor(np.vstack(wins)), k), b)
            pooled.append(T.segment_max(conv, lengths))
        return pooled[0] if len(pooled) == 1 else T.concat(pooled, axis=1)


def char_cnn_encode(one_hot, cnn):
    return cnn.encode_matrix(one_hot)


class LSTM:
    """Single-direction LSTM (no peepholes). Forget-gate bias starts at 1."""

    def __init__(self, params, name, n_in, n_hidden):
        self.n_hidden = n_hidden
        self.w_in = params.add(f"{name}.w_in", (n_in, 4 * n_hidden), fan=(n_in, n_hidden))
        self.w_rec = params.add(f"{name}.w_rec", (n_hidden, 4 * n_hidden), fan=(n_hidden, n_hidden))
        b = np.zeros(4 * n_hidden)
        b[n_hidden:2 * n_hidden] = 1.0
        self.bias = params.add(f"{name}.bias", (4 * n_hidden,), init=b)

    def __call__(self, x, reverse=False):
        return T.lstm_sequence(x, self.w_in, self.w_rec, self.bias, reverse=reverse)


class BiLSTM:
    """Stacked bidirectional LSTM.

    Calling it on a (T, d) tensor returns ``(hidden, last_fwd, last_bwd)``
    where ``hidden`` is (T, 2h) and the final states come from the top layer:
    the forward state after the last token and the backward state after the
    first.
    """

    def __init__(self, params, name, n_in, n_hidden, layers=1):
        self.n_hidden = n_hidden
        self.layers = []
        for i in range(layers):
            d = n_in if i == 0 else 2 * n_hidden
            self.layers.append((LSTM(params, f"{name}.l{i}.fwd", d, n_hidden),
                                LSTM(params, f"{name}.l{i}.bwd", d, n_hidden)))

    @property
    def out_dim(self):
        return 2 * self.n_hidden

    def __call__(self, x):
        if x.shape[0] == 0:
            raise ValueError("bilstm_encode needs a non-empty sequence")
        h = x
        for fwd, bwd in self.layers:
            hf = fwd(h)
            hb = bwd(h, reverse=True)
            h = T.concat([hf, hb], axis=1)
        n = x.shape[0]
        return h, hf[n - 1], hb[0]


def bilstm_encode(x, bilstm):
    return bilstm(x)
