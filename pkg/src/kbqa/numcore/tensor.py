"""Dense float64 tensors with tape-free reverse-mode differentiation.

Every op returns a new :class:`Tensor` holding references to its parents and a
closure mapping the output gradient to parent gradients. :func:`backward`
walks the graph in reverse topological order.
"""

from __future__ import annotations

import numpy as np


class GraphError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = ()
        self._backward = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def values(self):
        """Row-major flat view of the data."""
        return self.data.ravel()

    @property
    def ndim(self):
        return self.data.ndim

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def item(self):
        return float(self.data.reshape(()))

    def numpy(self):
        return self.data

    __add__ = lambda self, other: add(self, other)
    __radd__ = lambda self, other: add(other, self)
    __sub__ = lambda self, other: sub(self, other)
    __rsub__ = lambda self, other: sub(other, self)
    __mul__ = lambda self, other: mul(self, other)
    __rmul__ = lambda self, other: mul(other, self)
    __neg__ = lambda self: neg(self)
    __matmul__ = lambda self, other: matmul(self, other)
    __getitem__ = lambda self, idx: index(self, idx)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward_fn):
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def neg(a):
    return _node(-a.data, (a,), lambda g: (-g,))


def scale(a, c):
    c = float(c)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def matmul(a, b):
    """Matrix product for 1-D and 2-D operands (numpy ``@`` semantics)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ValueError(f"matmul supports 1-D/2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ad, bd = a.data, b.data
        if ad.ndim == 1 and bd.ndim == 1:
            return g * bd, g * ad
        if ad.ndim == 2 and bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        if ad.ndim == 1:
            return bd @ g, np.outer(ad, g)
        return g @ bd.T, ad.T @ g

    return _node(a.data @ b.data, (a, b), backward)


def sigmoid(x):
    out = _stable_sigmoid(x.data)
    return _node(out, (x,), lambda g: (g * out * (1.0 - out),))


def _stable_sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def tanh(x):
    out = np.tanh(x.data)
    return _node(out, (x,), lambda g: (g * (1.0 - out * out),))


def relu(x):
    mask = x.data > 0
    return _node(x.data * mask, (x,), lambda g: (g * mask,))


def exp(x):
    out = np.exp(x.data)
    return _node(out, (x,), lambda g: (g * out,))


def log(x):
    return _node(np.log(x.data), (x,), lambda g: (g / x.data,))


def reciprocal(x):
    out = 1.0 / x.data
    return _node(out, (x,), lambda g: (-g * out * out,))


def sqrt(x):
    out = np.sqrt(x.data)
    return _node(out, (x,), lambda g: (g * 0.5 / out,))


def sum(x, axis=None):
    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, x.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return _node(x.data.sum(axis=axis), (x,), backward)


def mean(x, axis=None):
    n = x.data.size if axis is None else x.shape[axis]
    return scale(sum(x, axis), 1.0 / n)


def reshape(x, shape):
    return _node(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def index(x, idx):
    """Basic/advanced indexing; gradients scatter-add back into ``x``."""

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        return (full,)

    return _node(x.data[idx], (x,), backward)


def take_rows(table, ids):
    """Gather rows of a 2-D table (embedding lookup)."""
    ids = np.asarray(ids, dtype=np.int64)

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return _node(table.data[ids], (table,), backward)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return _node(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                 lambda g: tuple(np.split(g, splits, axis=axis)))


def stack(tensors):
    tensors = [as_tensor(t) for t in tensors]
    return _node(np.stack([t.data for t in tensors]), tuple(tensors),
                 lambda g: tuple(g[i] for i in range(len(tensors))))


def max(x, axis=0):
    """Max along ``axis``; the gradient goes to the first maximal entry."""
    arg = np.argmax(x.data, axis=axis)
    out = np.take_along_axis(x.data, np.expand_dims(arg, axis), axis).squeeze(axis)

    def backward(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, np.expand_dims(arg, axis), np.expand_dims(g, axis), axis)
        return (full,)

    return _node(out, (x,), backward)


def segment_max(x, lengths):
    """Row-wise max over consecutive row segments of a 2-D tensor.

    ``x`` has ``sum(lengths)`` rows; the result has one row per segment.
    """
    lengths = list(lengths)
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)
    rows = []
    argrows = []
    for start, n in zip(starts, lengths):
        block = x.data[start:start + n]
        arg = np.argmax(block, axis=0)
        argrows.append(arg + start)
        rows.append(block[arg, np.arange(block.shape[1])])
    argrows = np.stack(argrows)
    cols = np.arange(x.shape[1])

    def backward(g):
        full = np.zeros_like(x.data)
        for r in range(len(lengths)):
            np.add.at(full, (argrows[r], cols), g[r])
        return (full,)

    return _node(np.stack(rows), (x,), backward)


def softmax(x):
    """Softmax over the last axis, computed after subtracting the max."""
    if x.data.size == 0:
        raise ValueError("softmax of an empty tensor")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _node(out, (x,), backward)


def log_softmax(x):
    if x.data.size == 0:
        raise ValueError("log_softmax of an empty tensor")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return _node(out, (x,), backward)


def log_sigmoid(x):
    z = x.data
    out = np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))
    s = _stable_sigmoid(z)
    return _node(out, (x,), lambda g: (g * (1.0 - s),))


def lstm_sequence(x, w_in, w_rec, bias, reverse=False):
    """Run one LSTM direction over a ``(T, d)`` sequence.

    Gates are packed ``[input, forget, cell, output]`` along the last axis of
    ``w_in`` (d, 4h), ``w_rec`` (h, 4h) and ``bias`` (4h). Returns a ``(T, h)``
    tensor whose row ``t`` is the hidden state produced at position ``t``; with
    ``reverse=True`` positions are consumed right-to-left.
    """
    xs = x.data
    T = xs.shape[0]
    h_dim = w_rec.shape[0]
    if xs.ndim != 2 or xs.shape[1] != w_in.shape[0]:
        raise ValueError(f"dimension mismatch: input {xs.shape} vs weights {w_in.shape}")
    if T == 0:
        raise ValueError("empty sequence")
    order = range(T - 1, -1, -1) if reverse else range(T)
    Wx, Wh, b = w_in.data, w_rec.data, bias.data

    hs = np.zeros((T, h_dim))
    cs = np.zeros((T, h_dim))
    gates = np.zeros((T, 4 * h_dim))
    prev_h = np.zeros((T, h_dim))
    prev_c = np.zeros((T, h_dim))
    pre_x = xs @ Wx + b
    h = np.zeros(h_dim)
    c = np.zeros(h_dim)
    for t in order:
        z = pre_x[t] + h @ Wh
        act = _stable_sigmoid(z)
        act[2 * h_dim:3 * h_dim] = np.tanh(z[2 * h_dim:3 * h_dim])
        i, f, g, o = act[:h_dim], act[h_dim:2 * h_dim], act[2 * h_dim:3 * h_dim], act[3 * h_dim:]
        prev_h[t], prev_c[t] = h, c
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t] = act
        hs[t], cs[t] = h, c

    def backward(dH):
        dZ = np.zeros((T, 4 * h_dim))
        dh_next = np.zeros(h_dim)
        dc_next = np.zeros(h_dim)
        for t in reversed(list(order)):
            i = gates[t, :h_dim]
            f = gates[t, h_dim:2 * h_dim]
            g = gates[t, 2 * h_dim:3 * h_dim]
            o = gates[t, 3 * h_dim:]
            tc = np.tanh(cs[t])
            dh = dH[t] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dZ[t] = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * prev_c[t] * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                dh * tc * o * (1.0 - o),
            ])
            dc_next = dc * f
            dh_next = Wh @ dZ[t]
        return dZ @ Wx.T, xs.T @ dZ, prev_h.T @ dZ, dZ.sum(axis=0)

    return _node(hs, (x, w_in, w_rec, bias), backward)


def backward(loss, params=None):
    """Populate ``.grad`` on every leaf reachable from the scalar ``loss``.

    Gradients accumulate into existing buffers. Tensors listed in ``params``
    are reset to zero first, so unreachable ones end with a zero gradient.
    A graph may be differentiated only once.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._consumed:
        raise GraphError("backward already called on this graph; run a new forward pass")
    if params is not None:
        for p in params:
            p.zero_grad()
    loss._consumed = True
    if not loss.requires_grad:
        return

    order = []
    seen = set()
    stack_ = [(loss, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack_.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = np.asarray(pg, dtype=np.float64)
