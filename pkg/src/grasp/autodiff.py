"""Dense reverse-mode autodiff on numpy arrays.

A Graph records tensors in creation order; backward walks that record in
strict reverse order, so gradient accumulation is deterministic and
bit-reproducible for a fixed sequence of operations. Everything is float64.
"""

import threading

import numpy as np

_state = threading.local()


class ShapeError(ValueError):
    pass


class GradError(ValueError):
    pass


def _active_graph():
    return getattr(_state, "graph", None)


def _grad_enabled():
    return getattr(_state, "grad_enabled", True)


class no_grad:
    """Context manager: ops executed inside are not recorded."""

    def __enter__(self):
        self._prev = _grad_enabled()
        _state.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _state.grad_enabled = self._prev
        return False


class Graph:
    """Append-only tape. Use as a context manager around a forward pass."""

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        self._prev = _active_graph()
        _state.graph = self
        return self

    def __exit__(self, *exc):
        _state.graph = self._prev
        return False

    def register(self, t):
        t.node_id = len(self.nodes)
        t._graph = self
        self.nodes.append(t)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "node_id", "_graph", "_inputs", "_vjp")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self.node_id = None
        self._graph = None
        self._inputs = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # small amount of operator sugar; constants are wrapped on the fly
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, scale(_wrap(other), -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, inputs, vjp):
    """Create an op output, recording it when a graph is active."""
    out = Tensor(data)
    g = _active_graph()
    if g is not None and _grad_enabled():
        out.requires_grad = any(t.requires_grad for t in inputs)
        if out.requires_grad:
            out._inputs = tuple(inputs)
            out._vjp = vjp
        g.register(out)
    return out


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (inverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def backward(root, params=()):
    """Reverse pass from a scalar root through the active-or-owning graph.

    Every tensor in `params` ends up with a grad array; parameters the root
    does not depend on get zeros.
    """
    if root.data.size != 1:
        raise GradError(f"backward root must be scalar, got shape {root.data.shape}")
    g = root._graph
    if g is None or root.node_id is None:
        raise GradError("backward root was not recorded in any Graph")
    for t in g.nodes:
        t.grad = None
    for p in params:
        p.grad = None
    root.grad = np.ones_like(root.data)
    for t in reversed(g.nodes[: root.node_id + 1]):
        if t.grad is None or t._vjp is None:
            continue
        t._vjp(t.grad)
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)


# ---------------------------------------------------------------- primitives


def matmul(a, b):
    if a.data.ndim not in (1, 2) or b.data.ndim != 2:
        raise ShapeError(f"matmul expects (n,)|(B,n) @ (n,m), got {a.shape} @ {b.shape}")
    if a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def vjp(g):
        if a.data.ndim == 1:
            _accumulate(a, g @ b.data.T)
            _accumulate(b, np.outer(a.data, g))
        else:
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)

    return _make(data, (a, b), vjp)


def add(a, b):
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeError(f"add shapes not broadcastable: {a.shape} + {b.shape}")

    if a.data.shape == b.data.shape:
        def vjp(g):
            _accumulate(a, g)
            _accumulate(b, g)
    else:
        def vjp(g):
            _accumulate(a, _unbroadcast(g, a.data.shape))
            _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(data, (a, b), vjp)


def mul(a, b):
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul shapes not broadcastable: {a.shape} * {b.shape}")

    def vjp(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), vjp)


def scale(a, c):
    c = float(c)

    def vjp(g):
        _accumulate(a, g * c)

    return _make(a.data * c, (a,), vjp)


def tsum(a, axis=None, keepdims=False):
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            _accumulate(a, np.broadcast_to(gg, a.data.shape).copy())

    return _make(data, (a,), vjp)


def tmean(a, axis=None, keepdims=False):
    n = a.data.size if axis is None else a.data.shape[axis]
    return scale(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def square(a):
    def vjp(g):
        _accumulate(a, g * 2.0 * a.data)

    return _make(a.data ** 2, (a,), vjp)


def elu(a, alpha=1.0):
    neg = a.data < 0
    data = a.data.copy()
    e = alpha * np.exp(a.data[neg])
    data[neg] = e - alpha

    def vjp(g):
        out = g.copy()
        out[neg] *= e
        _accumulate(a, out)

    return _make(data, (a,), vjp)


def tanh(a):
    data = np.tanh(a.data)

    def vjp(g):
        _accumulate(a, g * (1.0 - data ** 2))

    return _make(data, (a,), vjp)


def softmax(a, tau=1.0, axis=-1):
    """softmax(a / tau), computed with max subtraction."""
    if tau <= 0:
        raise ValueError("softmax temperature must be positive")
    z = a.data / tau
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * p).sum(axis=axis, keepdims=True)
        _accumulate(a, p * (g - inner) / tau)

    return _make(p, (a,), vjp)


def texp(a):
    data = np.exp(a.data)

    def vjp(g):
        _accumulate(a, g * data)

    return _make(data, (a,), vjp)


def tlog(a):
    def vjp(g):
        _accumulate(a, g / a.data)

    return _make(np.log(a.data), (a,), vjp)


def softplus(a):
    # stable: log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
    data = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))
    sig = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        _accumulate(a, g * sig)

    return _make(data, (a,), vjp)


def concat(tensors, axis=-1):
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accumulate(t, piece)

    return _make(data, tuple(tensors), vjp)


def tslice(a, key):
    data = a.data[key]

    def vjp(g):
        full = np.zeros_like(a.data)
        full[key] = g
        _accumulate(a, full)

    return _make(data, (a,), vjp)


def max_index(a, axis=-1):
    """Argmax indices as a plain integer array (not differentiable)."""
    return np.argmax(a.data, axis=axis)


def stop_gradient(a):
    return _make(a.data.copy(), (), None)


def reshape(a, shape):
    data = a.data.reshape(shape)
    orig = a.data.shape

    def vjp(g):
        _accumulate(a, g.reshape(orig))

    return _make(data, (a,), vjp)


def linear(x, w, b, act="none", alpha=1.0):
    """Fused x @ w + b followed by an activation; one tape node per layer."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise ShapeError(f"linear inner dims differ: {x.shape} @ {w.shape}")
    z = x.data @ w.data + b.data
    if act == "elu":
        neg = z < 0
        e = alpha * np.exp(np.where(neg, z, 0.0))
        out_data = np.where(neg, e - alpha, z)

        def dact(g):
            out = g.copy()
            out[neg] *= e[neg]
            return out
    elif act == "tanh":
        out_data = np.tanh(z)

        def dact(g):
            return g * (1.0 - out_data ** 2)
    elif act == "none":
        out_data = z

        def dact(g):
            return g
    else:
        raise ValueError(f"unknown activation {act!r}")

    def vjp(g):
        dz = dact(g)
        _accumulate(x, dz @ w.data.T)
        if x.data.ndim == 1:
            _accumulate(w, np.outer(x.data, dz))
            _accumulate(b, dz)
        else:
            _accumulate(w, x.data.T @ dz)
            _accumulate(b, dz.sum(axis=0))

    return _make(out_data, (x, w, b), vjp)


def repeat_rows(a, k):
    """(R, d) -> (R*k, d): each row repeated k times, differentiable."""
    r, d = a.data.shape
    data = np.repeat(a.data, k, axis=0)

    def vjp(g):
        _accumulate(a, g.reshape(r, k, d).sum(axis=1))

    return _make(data, (a,), vjp)


def tile_batch(a, batch):
    """(...,) -> (batch, ...): prepend a broadcast batch axis, differentiable."""
    data = np.broadcast_to(a.data, (batch,) + a.data.shape).copy()

    def vjp(g):
        _accumulate(a, g.sum(axis=0))

    return _make(data, (a,), vjp)


def stack(tensors, axis=0):
    tensors = list(tensors)
    data = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        for i, t in enumerate(tensors):
            _accumulate(t, np.take(g, i, axis=axis))

    return _make(data, tuple(tensors), vjp)
