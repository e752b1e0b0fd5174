"""Minimal dense-tensor library with reverse-mode automatic differentiation.

Tensors wrap numpy arrays. Operations executed inside a ``Graph`` context are
recorded on a tape; ``backward`` replays the tape in reverse to accumulate
gradients into leaf tensors (parameters). Outside a graph context, ops run
without recording, which doubles as a cheap inference mode.

Precision is process-global: float32 for training, float64 for gradient
checks (see ``precision``).
"""

from __future__ import annotations

import contextlib
import math
from typing import Callable, Iterable

import numpy as np
from scipy.special import erf

__all__ = [
    "Tensor",
    "Graph",
    "GraphError",
    "DimensionError",
    "NumericError",
    "precision",
    "get_dtype",
    "backward",
    "grad_check",
    "Params",
]


class GraphError(ValueError):
    """Contract violation on graph construction or backward."""


class DimensionError(ValueError):
    """Shape mismatch between operands."""


class NumericError(ArithmeticError):
    """Non-finite values where finiteness is required."""


_DTYPE = np.float32
_ACTIVE_GRAPH: "Graph | None" = None


def get_dtype():
    return _DTYPE


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the global float precision ('float32'/'float64')."""
    global _DTYPE
    prev = _DTYPE
    _DTYPE = np.dtype(dtype).type
    try:
        yield
    finally:
        _DTYPE = prev


class Graph:
    """Tape of recorded operations; recording order is a valid eval order."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        global _ACTIVE_GRAPH
        self._prev = _ACTIVE_GRAPH
        _ACTIVE_GRAPH = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_GRAPH
        _ACTIVE_GRAPH = self._prev
        return False

    def _record(self, t: "Tensor"):
        t.node_id = len(self.nodes)
        self.nodes.append(t)


class Tensor:
    """Dense array, optionally a node in a differentiation graph."""

    __slots__ = ("data", "node_id", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=_DTYPE)
        self.node_id = None
        self.requires_grad = requires_grad
        self.grad = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracked(*tensors: Tensor) -> bool:
    if _ACTIVE_GRAPH is None:
        return False
    return any(t.requires_grad or t.node_id is not None for t in tensors)


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if _tracked(*parents):
        out._parents = parents
        out._backward = backward_fn
        _ACTIVE_GRAPH._record(out)
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad


def _accum(grads: dict, t: Tensor, g: np.ndarray):
    if t.node_id is not None:
        if t.node_id in grads:
            grads[t.node_id] = grads[t.node_id] + g
        else:
            grads[t.node_id] = g
    elif t.requires_grad:
        t.grad = g.astype(t.data.dtype) if t.grad is None else t.grad + g


# ---------------------------------------------------------------------------
# primitives


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def back(g, grads):
        _accum(grads, a, _unbroadcast(g, a.shape))
        _accum(grads, b, _unbroadcast(g, b.shape))

    return _make(data, (a, b), back)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data - b.data

    def back(g, grads):
        _accum(grads, a, _unbroadcast(g, a.shape))
        _accum(grads, b, _unbroadcast(-g, b.shape))

    return _make(data, (a, b), back)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def back(g, grads):
        _accum(grads, a, _unbroadcast(g * b.data, a.shape))
        _accum(grads, b, _unbroadcast(g * a.data, b.shape))

    return _make(data, (a, b), back)


def scale(a, s: float) -> Tensor:
    a = _as_tensor(a)
    data = a.data * s

    def back(g, grads):
        _accum(grads, a, g * s)

    return _make(data, (a,), back)


def add_const(a, c) -> Tensor:
    """Add a non-differentiable array (e.g. an attention mask bias)."""
    a = _as_tensor(a)
    data = a.data + np.asarray(c, dtype=a.data.dtype)

    def back(g, grads):
        _accum(grads, a, _unbroadcast(g, a.shape))

    return _make(data, (a,), back)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape[-1] != b.data.shape[-2]:
        raise DimensionError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    data = a.data @ b.data

    def back(g, grads):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        _accum(grads, a, _unbroadcast(ga, a.shape))
        _accum(grads, b, _unbroadcast(gb, b.shape))

    return _make(data, (a, b), back)


def transpose(a, axes) -> Tensor:
    a = _as_tensor(a)
    data = np.transpose(a.data, axes)
    inv = np.argsort(axes)

    def back(g, grads):
        _accum(grads, a, np.transpose(g, inv))

    return _make(data, (a,), back)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    data = a.data.reshape(shape)

    def back(g, grads):
        _accum(grads, a, g.reshape(a.shape))

    return _make(data, (a,), back)


def concat(parts: Iterable[Tensor], axis: int) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]

    def back(g, grads):
        offs = np.cumsum([0] + sizes)
        for p, lo, hi in zip(parts, offs[:-1], offs[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(grads, p, g[tuple(idx)])

    return _make(data, tuple(parts), back)


def tensor_sum(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def back(g, grads):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(grads, a, np.broadcast_to(g, a.shape).copy())

    return _make(data, (a,), back)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather: out[..., :] = table[ids[...], :]."""
    ids = np.asarray(ids)
    data = table.data[ids]

    def back(g, grads):
        gt = np.zeros_like(table.data, dtype=g.dtype)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.data.shape[-1]))
        _accum(grads, table, gt)

    return _make(data, (table,), back)


def take_last(a, ids: np.ndarray) -> Tensor:
    """Pick one element along the last axis: out[...] = a[..., ids[...]]."""
    a = _as_tensor(a)
    ids = np.asarray(ids)
    data = np.take_along_axis(a.data, ids[..., None], axis=-1)[..., 0]

    def back(g, grads):
        ga = np.zeros_like(a.data, dtype=g.dtype)
        np.put_along_axis(ga, ids[..., None], g[..., None], axis=-1)
        _accum(grads, a, ga)

    return _make(data, (a,), back)


def softmax(a, axis=-1) -> Tensor:
    a = _as_tensor(a)
    if not np.isfinite(a.data).all():
        raise NumericError("softmax input contains non-finite values")
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    data = e / e.sum(axis=axis, keepdims=True)

    def back(g, grads):
        dot = (g * data).sum(axis=axis, keepdims=True)
        _accum(grads, a, data * (g - dot))

    return _make(data, (a,), back)


def log_softmax(a, axis=-1) -> Tensor:
    a = _as_tensor(a)
    z = a.data - a.data.max(axis=axis, keepdims=True)
    data = z - np.log(np.exp(z).sum(axis=axis, keepdims=True))

    def back(g, grads):
        _accum(grads, a, g - np.exp(data) * g.sum(axis=axis, keepdims=True))

    return _make(data, (a,), back)


def layer_norm(x, gamma, beta, eps=1e-5) -> Tensor:
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    h = x.data.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = gamma.data * xhat + beta.data

    def back(g, grads):
        dxhat = g * gamma.data
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        bdims = tuple(range(g.ndim - 1))
        _accum(grads, x, dx)
        _accum(grads, gamma, (g * xhat).sum(axis=bdims))
        _accum(grads, beta, g.sum(axis=bdims))

    return _make(data, (x, gamma, beta), back)


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(a) -> Tensor:
    a = _as_tensor(a)
    phi = 0.5 * (1.0 + erf(a.data * _INV_SQRT2))
    data = a.data * phi

    def back(g, grads):
        pdf = np.exp(-0.5 * a.data * a.data) * _INV_SQRT2PI
        _accum(grads, a, g * (phi + a.data * pdf))

    return _make(data, (a,), back)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    data = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def back(g, grads):
        _accum(grads, a, g * data * (1.0 - data))

    return _make(data, (a,), back)


def softplus(a) -> Tensor:
    a = _as_tensor(a)
    data = np.logaddexp(0.0, a.data)

    def back(g, grads):
        _accum(grads, a, g * 0.5 * (1.0 + np.tanh(0.5 * a.data)))

    return _make(data, (a,), back)


def dropout(a, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout. A null rng or zero rate is a no-op (eval mode)."""
    a = _as_tensor(a)
    if rng is None or rate <= 0.0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.data.dtype) / (1.0 - rate)
    return mul(a, Tensor(keep))


def pair_term(q, pair) -> Tensor:
    """Spatial attention term: out[b,a,i,j] = q[b,a,i,:] . pair[b,i,j,:]."""
    q, pair = _as_tensor(q), _as_tensor(pair)
    data = np.einsum("band,bnmd->banm", q.data, pair.data, optimize=True)

    def back(g, grads):
        gq = np.einsum("banm,bnmd->band", g, pair.data, optimize=True)
        gp = np.einsum("banm,band->bnmd", g, q.data, optimize=True)
        _accum(grads, q, gq)
        _accum(grads, pair, gp)

    return _make(data, (q, pair), back)


# ---------------------------------------------------------------------------
# composites


def masked_mean(x: Tensor, weights: np.ndarray) -> Tensor:
    """Weighted mean with constant weights; zero total weight yields 0."""
    w = np.asarray(weights, dtype=x.data.dtype)
    total = float(w.sum())
    if total == 0.0:
        return Tensor(np.zeros(()))
    return scale(tensor_sum(mul(x, Tensor(w))), 1.0 / total)


def cross_entropy(logits: Tensor, targets: np.ndarray, weights: np.ndarray) -> Tensor:
    """Mean negative log-likelihood over positions with nonzero weight."""
    if logits.shape[:-1] != np.asarray(targets).shape:
        raise GraphError(
            f"cross_entropy targets shape {np.shape(targets)} does not match logits {logits.shape}"
        )
    nll = scale(take_last(log_softmax(logits), targets), -1.0)
    return masked_mean(nll, weights)


def binary_cross_entropy_with_logits(
    logits: Tensor, targets: np.ndarray, weights: np.ndarray, pos_weight: float = 1.0
) -> Tensor:
    """Mean of softplus(z) - z*y per pair, with optional positive-class weight."""
    y = np.asarray(targets, dtype=logits.data.dtype)
    w = np.asarray(weights, dtype=logits.data.dtype)
    if pos_weight != 1.0:
        w = w * np.where(y > 0.5, pos_weight, 1.0)
    per = sub(softplus(logits), mul(logits, Tensor(y)))
    return masked_mean(per, w)


# ---------------------------------------------------------------------------
# backward & checking


def backward(graph: Graph, loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into each reachable leaf's ``.grad``."""
    if loss.data.size != 1:
        raise GraphError(f"backward expects a scalar loss, got shape {loss.shape}")
    if loss.node_id is None:
        return  # loss not produced by this graph: nothing reachable
    grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    for node in reversed(graph.nodes[: loss.node_id + 1]):
        g = grads.pop(node.node_id, None)
        if g is None or node._backward is None:
            continue
        node._backward(g, grads)


class Params:
    """Named leaf tensors addressable by hierarchical dotted name."""

    def __init__(self):
        self._store: dict[str, Tensor] = {}

    def add(self, name: str, data) -> Tensor:
        t = Tensor(data, requires_grad=True)
        self._store[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._store[name]

    def __contains__(self, name):
        return name in self._store

    def __iter__(self):
        return iter(self._store)

    def items(self):
        return self._store.items()

    def names(self):
        return list(self._store)

    def zero_grad(self):
        for t in self._store.values():
            t.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        """Gradient per parameter; parameters untouched by backward get zeros."""
        return {
            k: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for k, t in self._store.items()
        }

    def astype(self, dtype) -> "Params":
        out = Params()
        for k, t in self._store.items():
            nt = Tensor.__new__(Tensor)
            nt.data = t.data.astype(dtype)
            nt.node_id = None
            nt.requires_grad = True
            nt.grad = None
            nt._parents = ()
            nt._backward = None
            out._store[k] = nt
        return out

    def load_state(self, state: dict[str, np.ndarray], prefix: str = "") -> list[str]:
        """Copy matching arrays in; returns names left at initialization."""
        missed = []
        for k, t in self._store.items():
            if k.startswith(prefix) and k in state:
                src = state[k]
                if src.shape != t.data.shape:
                    raise DimensionError(f"checkpoint tensor {k}: {src.shape} != {t.data.shape}")
                t.data = src.astype(t.data.dtype)
            else:
                missed.append(k)
        return missed

    def state(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._store.items()}


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    shape = shape if shape is not None else (fan_in, fan_out)
    return rng.uniform(-limit, limit, size=shape).astype(_DTYPE)


def grad_check(
    f: Callable[[], Tensor],
    params: Params,
    step: float = 1e-5,
    max_coords: int = 8,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` must rebuild the loss from ``params`` on every call. Run under
    float64 precision; sampled coordinates per parameter keep it fast.
    """
    rng = rng or np.random.default_rng(0)
    params.zero_grad()
    with Graph() as g:
        loss = f()
    if not np.isfinite(loss.data).all():
        raise NumericError("grad_check: loss is not finite")
    backward(g, loss)
    analytic = params.gradients()

    worst = 0.0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        n = flat.size
        coords = np.arange(n) if n <= max_coords else rng.choice(n, size=max_coords, replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + step
            f_plus = float(f().data)
            flat[c] = orig - step
            f_minus = float(f().data)
            flat[c] = orig
            fd = (f_plus - f_minus) / (2.0 * step)
            an = float(analytic[name].reshape(-1)[c])
            err = abs(an - fd) / max(abs(an), abs(fd), 1e-8)
            worst = max(worst, err)
    return worst
