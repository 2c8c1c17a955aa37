"""Minimal reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a float64 ndarray and records the operation that produced
it.  Calling ``backward()`` on a scalar walks the tape in reverse topological
order and accumulates gradients into every tensor created with
``requires_grad=True``.  Only the operations needed by the graph networks and
the policy-gradient losses are provided; all of them broadcast like numpy and
reduce gradients back over broadcast axes.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph bookkeeping -------------------------------------------------

    @staticmethod
    def _make(data: np.ndarray, parents: tuple["Tensor", ...], backward) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def _accum(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        g = _unbroadcast(np.asarray(g, dtype=np.float64), self.data.shape)
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = _as_tensor(other)
        out_data = self.data + other.data

        def back(g):
            self._accum(g)
            other._accum(g)

        return Tensor._make(out_data, (self, other), back)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        def back(g):
            self._accum(-g)

        return Tensor._make(-self.data, (self,), back)

    def __sub__(self, other) -> "Tensor":
        return self + (-_as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return _as_tensor(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = _as_tensor(other)
        out_data = self.data * other.data

        def back(g):
            self._accum(g * other.data)
            other._accum(g * self.data)

        return Tensor._make(out_data, (self, other), back)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = _as_tensor(other)
        out_data = self.data / other.data

        def back(g):
            self._accum(g / other.data)
            other._accum(-g * self.data / (other.data * other.data))

        return Tensor._make(out_data, (self, other), back)

    def __rtruediv__(self, other) -> "Tensor":
        return _as_tensor(other) / self

    def __matmul__(self, other) -> "Tensor":
        other = _as_tensor(other)
        out_data = self.data @ other.data

        def back(g):
            self._accum(g @ other.data.T)
            other._accum(self.data.T @ g)

        return Tensor._make(out_data, (self, other), back)

    def __pow__(self, exponent: float) -> "Tensor":
        out_data = self.data**exponent

        def back(g):
            self._accum(g * exponent * self.data ** (exponent - 1))

        return Tensor._make(out_data, (self,), back)

    # -- reductions and reshaping -----------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def back(g):
            g = np.asarray(g)
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accum(np.broadcast_to(g, self.data.shape))

        return Tensor._make(out_data, (self,), back)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape) -> "Tensor":
        out_data = self.data.reshape(*shape)

        def back(g):
            self._accum(np.asarray(g).reshape(self.data.shape))

        return Tensor._make(out_data, (self,), back)

    @property
    def T(self) -> "Tensor":
        def back(g):
            self._accum(np.asarray(g).T)

        return Tensor._make(self.data.T, (self,), back)

    # -- elementwise nonlinearities ---------------------------------------

    def exp(self) -> "Tensor":
        out_data = np.exp(self.data)

        def back(g):
            self._accum(g * out_data)

        return Tensor._make(out_data, (self,), back)

    def log(self) -> "Tensor":
        out_data = np.log(self.data)

        def back(g):
            self._accum(g / self.data)

        return Tensor._make(out_data, (self,), back)

    def tanh(self) -> "Tensor":
        out_data = np.tanh(self.data)

        def back(g):
            self._accum(g * (1.0 - out_data * out_data))

        return Tensor._make(out_data, (self,), back)

    def leaky_relu(self, slope: float = 0.2) -> "Tensor":
        mask = self.data > 0
        out_data = np.where(mask, self.data, slope * self.data)

        def back(g):
            self._accum(np.where(mask, g, slope * np.asarray(g)))

        return Tensor._make(out_data, (self,), back)

    def clip(self, lo: float, hi: float) -> "Tensor":
        """Clamp to [lo, hi]; gradient is passed only inside the interval."""
        mask = (self.data >= lo) & (self.data <= hi)
        out_data = np.clip(self.data, lo, hi)

        def back(g):
            self._accum(np.where(mask, g, 0.0))

        return Tensor._make(out_data, (self,), back)

    # -- indexing / scatter-gather -----------------------------------------

    def gather_rows(self, index: np.ndarray) -> "Tensor":
        """Rows selected by an integer index array (with repetition)."""
        index = np.asarray(index, dtype=np.intp)
        out_data = self.data[index]

        def back(g):
            acc = np.zeros_like(self.data)
            np.add.at(acc, index, np.asarray(g))
            self._accum(acc)

        return Tensor._make(out_data, (self,), back)

    def segment_sum(self, segment_ids: np.ndarray, num_segments: int) -> "Tensor":
        """Sum rows into ``num_segments`` buckets given by ``segment_ids``."""
        segment_ids = np.asarray(segment_ids, dtype=np.intp)
        out_shape = (num_segments,) + self.data.shape[1:]
        out_data = np.zeros(out_shape, dtype=np.float64)
        np.add.at(out_data, segment_ids, self.data)

        def back(g):
            self._accum(np.asarray(g)[segment_ids])

        return Tensor._make(out_data, (self,), back)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def maximum(a: Tensor, b) -> Tensor:
    """Elementwise max; ties send the gradient to the first argument."""
    b = _as_tensor(b)
    mask = a.data >= b.data
    out_data = np.where(mask, a.data, b.data)

    def back(g):
        g = np.asarray(g)
        a._accum(np.where(mask, g, 0.0))
        b._accum(np.where(mask, 0.0, g))

    return Tensor._make(out_data, (a, b), back)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        g = np.asarray(g)
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            t._accum(g[tuple(sl)])

    return Tensor._make(out_data, tuple(tensors), back)


def segment_softmax(scores: Tensor, segment_ids: np.ndarray,
                    num_segments: int) -> Tensor:
    """Softmax applied independently within each segment (stable: shifts by the
    per-segment max).  ``scores`` has shape (n,) or (n, heads)."""
    segment_ids = np.asarray(segment_ids, dtype=np.intp)
    # per-segment max, computed outside the graph (shift is gradient-free)
    shape = (num_segments,) + scores.data.shape[1:]
    seg_max = np.full(shape, -np.inf)
    np.maximum.at(seg_max, segment_ids, scores.data)
    shifted = scores - Tensor(seg_max[segment_ids])
    e = shifted.exp()
    denom = e.segment_sum(segment_ids, num_segments)
    return e / denom.gather_rows(segment_ids)


def parameter(shape: tuple[int, ...], rng: np.random.Generator,
              scale: float | None = None) -> Tensor:
    """Trainable tensor with uniform Glorot-style initialization."""
    if scale is None:
        fan_in = shape[0] if len(shape) > 1 else max(shape[0], 1)
        scale = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)


def gradcheck(f, params: list[Tensor], eps: float = 1e-6) -> float:
    """Maximum per-parameter relative error between analytic and central
    finite-difference gradients of the scalar ``f()``.

    The error for one parameter tensor is ``norm(ga - gn) / max(norm(ga),
    norm(gn))`` over all its elements; comparing whole-tensor norms keeps the
    check meaningful where single entries sit in finite-difference roundoff.
    """
    for p in params:
        p.zero_grad()
    out = f()
    out.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
                for p in params]
    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.reshape(-1)
        gn = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(f().data)
            flat[i] = orig - eps
            lo = float(f().data)
            flat[i] = orig
            gn[i] = (hi - lo) / (2 * eps)
        gaf = ga.reshape(-1)
        scale = max(float(np.linalg.norm(gaf)), float(np.linalg.norm(gn)), 1e-12)
        worst = max(worst, float(np.linalg.norm(gaf - gn)) / scale)
    return worst
