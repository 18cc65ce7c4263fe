"""Dense tensors with reverse-mode automatic differentiation.

numpy supplies storage and kernels; this module supplies the tape. A Tensor
wraps an ndarray plus (optionally) the closure needed to push gradients back
to its parents. Graphs are built implicitly by calling the ops below and are
torn down by `backward`, which walks the tape once in reverse topological
order. Training runs in float32; gradient checks switch the whole graph to
float64 via `precision("double")`.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable

import numpy as np


class NumericsError(RuntimeError):
    """Raised for malformed graphs, shape mismatches, or non-finite values."""


_DTYPES = {"single": np.float32, "double": np.float64}
_default_dtype = np.float32

# When True every op output (and every leaf gradient) is checked for NaN/Inf.
strict_checks = True


def set_default_dtype(mode: str) -> None:
    global _default_dtype
    if mode not in _DTYPES:
        raise NumericsError(f"unknown precision mode {mode!r}")
    _default_dtype = _DTYPES[mode]


def default_dtype() -> np.dtype:
    return np.dtype(_default_dtype)


@contextlib.contextmanager
def precision(mode: str):
    """Temporarily switch the default dtype ("single" or "double")."""
    global _default_dtype
    saved = _default_dtype
    set_default_dtype(mode)
    try:
        yield
    finally:
        _default_dtype = saved


def _check_finite(arr: np.ndarray, where: str) -> None:
    if strict_checks and not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values produced by {where}")


class Tensor:
    """An ndarray with an optional gradient tape entry.

    Leaves created with requires_grad=True are trainable parameters; leaves
    without it are constants and never receive gradient accumulation.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_vjps")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str | None = None):
        if isinstance(data, Tensor):
            raise NumericsError("cannot wrap a Tensor in a Tensor")
        arr = np.asarray(data, dtype=dtype if dtype is not None else _default_dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(_default_dtype)
        _check_finite(arr, "tensor creation")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._vjps: tuple[Callable[[np.ndarray], np.ndarray], ...] = ()

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{tag})"

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, _as_tensor(other, self))

    def __radd__(self, other):
        return add(_as_tensor(other, self), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self))

    def __rsub__(self, other):
        return sub(_as_tensor(other, self), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self))

    def __rmul__(self, other):
        return mul(_as_tensor(other, self), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        if value.dtype != like.dtype:
            raise NumericsError(
                f"dtype mismatch in op: {value.dtype} vs {like.dtype}"
            )
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def constant(value, like: Tensor | None = None) -> Tensor:
    """A non-trainable tensor, cast to `like`'s dtype when given."""
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value), dtype=dtype)


def _result(data: np.ndarray, parents: tuple[Tensor, ...], vjps, op: str) -> Tensor:
    _check_finite(data, op)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjps = tuple(vjps)
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjps = ()
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` over axes that numpy broadcasting introduced or stretched."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _pair(a, b)
    return _result(
        a.data + b.data,
        (a, b),
        (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _pair(a, b)
    return _result(
        a.data - b.data,
        (a, b),
        (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _pair(a, b)
    return _result(
        a.data * b.data,
        (a, b),
        (
            lambda g: _unbroadcast(g * b.data, a.shape),
            lambda g: _unbroadcast(g * a.data, b.shape),
        ),
        "mul",
    )


def neg(a: Tensor) -> Tensor:
    return _result(-a.data, (a,), (lambda g: -g,), "neg")


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if not isinstance(a, Tensor):
        a = _as_tensor(a, b)
    if not isinstance(b, Tensor):
        b = _as_tensor(b, a)
    if a.dtype != b.dtype:
        raise NumericsError(f"dtype mismatch in op: {a.dtype} vs {b.dtype}")
    return a, b


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; supports batched stacks via numpy matmul semantics."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise NumericsError("matmul operands must have ndim >= 2")
    data = a.data @ b.data

    def da(g):
        return _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)

    def db(g):
        return _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)

    return _result(data, (a, b), (da, db), "matmul")


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                 np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d)))).astype(d.dtype)
    return _result(y, (x,), (lambda g: g * y * (1.0 - y),), "sigmoid")


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), (lambda g: g * (1.0 - y * y),), "tanh")


def relu(x: Tensor) -> Tensor:
    y = np.maximum(x.data, 0)
    mask = (x.data > 0).astype(x.dtype)
    return _result(y, (x,), (lambda g: g * mask,), "relu")


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, numerically stabilised."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def dx(g):
        return (g - (g * y).sum(axis=-1, keepdims=True)) * y

    return _result(y, (x,), (dx,), "softmax")


def log(x: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(x.data)
    return _result(y, (x,), (lambda g: g / x.data,), "log")


def exp(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(x.data)
    return _result(y, (x,), (lambda g: g * y,), "exp")


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    y = np.clip(x.data, lo, hi)
    mask = ((x.data >= lo) & (x.data <= hi)).astype(x.dtype)
    return _result(y, (x,), (lambda g: g * mask,), "clip")


def mean(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    y = x.data.mean(axis=axis, keepdims=keepdims)
    if axis is None:
        n = x.size

        def dx(g):
            return np.broadcast_to(g / n, x.shape).astype(x.dtype, copy=False)
    else:
        n = x.shape[axis]

        def dx(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g / n, x.shape).astype(x.dtype, copy=False)

    return _result(np.asarray(y), (x,), (dx,), "mean")


def invariant_mean(x: Tensor, axis: int) -> Tensor:
    """Mean along `axis`, bitwise invariant to reordering along that axis.

    Float addition is not associative, so a plain mean is only invariant up
    to rounding. Sorting the values first fixes the summation order for any
    permutation of the inputs; the gradient of a mean is uniform, so the
    backward pass needs no permutation tracking.
    """
    n = x.shape[axis]
    y = np.sort(x.data, axis=axis).sum(axis=axis) / x.dtype.type(n)

    def dx(g):
        g = np.expand_dims(g, axis)
        return np.broadcast_to(g / n, x.shape).astype(x.dtype, copy=False)

    return _result(np.asarray(y), (x,), (dx,), "invariant_mean")


def tsum(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    y = x.data.sum(axis=axis, keepdims=keepdims)

    def dx(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, x.shape).astype(x.dtype, copy=False)

    return _result(np.asarray(y), (x,), (dx,), "sum")


def gather_rows(table: Tensor, ids) -> Tensor:
    """Row lookup: out[..., :] = table[ids[...], :]. Errors on out-of-range ids."""
    idx = np.asarray(ids)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise NumericsError(
            f"gather id out of range [0, {table.shape[0]}): "
            f"min={idx.min()} max={idx.max()}"
        )
    data = table.data[idx]

    def dtable(g):
        acc = np.zeros_like(table.data)
        np.add.at(acc, idx, g)
        return acc

    return _result(data, (table,), (dtable,), "gather_rows")


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    ts = list(tensors)
    if not ts:
        raise NumericsError("concat of zero tensors")
    if len({t.dtype for t in ts}) != 1:
        raise NumericsError("concat dtype mismatch")
    data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.shape[axis] for t in ts]
    bounds = np.cumsum(sizes)[:-1]

    def make_vjp(i):
        def vjp(g):
            return np.split(g, bounds, axis=axis)[i]
        return vjp

    return _result(data, tuple(ts), tuple(make_vjp(i) for i in range(len(ts))), "concat")


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = x.data.reshape(shape)
    return _result(data, (x,), (lambda g: g.reshape(x.shape),), "reshape")


def broadcast_to(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = np.broadcast_to(x.data, shape)
    return _result(np.ascontiguousarray(data), (x,), (lambda g: _unbroadcast(g, x.shape),), "broadcast_to")


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))
    data = np.ascontiguousarray(x.data.transpose(axes))
    return _result(data, (x,), (lambda g: g.transpose(inverse),), "transpose")


def where_mask(mask, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise select with a constant boolean mask; exact value routing."""
    a, b = _pair(a, b)
    m = np.asarray(mask, dtype=bool)
    data = np.where(m, a.data, b.data)
    fm = m.astype(a.dtype)

    return _result(
        data,
        (a, b),
        (
            lambda g: _unbroadcast(g * fm, a.shape),
            lambda g: _unbroadcast(g * (1.0 - fm), b.shape),
        ),
        "where_mask",
    )


def dropout(x: Tensor, p: float, rng, train: bool) -> Tensor:
    """Inverted dropout. The mask is drawn once and stored in the tape closure."""
    if not train or p <= 0.0:
        return x
    keep = (rng.uniform(x.shape) >= p)
    mask = keep.astype(x.dtype) / x.dtype.type(1.0 - p)
    return mul(x, Tensor(mask, dtype=x.dtype))


# ---------------------------------------------------------------------------
# tape traversal
# ---------------------------------------------------------------------------

def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Reverse-mode sweep from a scalar loss.

    Returns a map {trainable leaf -> gradient array}; also mirrors each
    gradient onto the leaf's .grad. Leaves with requires_grad=False are
    never touched.
    """
    if loss.size != 1:
        raise NumericsError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise NumericsError("loss does not depend on any trainable tensor")
    order = _toposort(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaf_grads: dict[Tensor, np.ndarray] = {}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._parents:
            for parent, vjp in zip(node._parents, node._vjps):
                if not parent.requires_grad:
                    continue
                pg = vjp(g)
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg
        else:
            if strict_checks and not np.all(np.isfinite(g)):
                raise NumericsError("NaN/Inf gradient during backprop")
            node.grad = g
            leaf_grads[node] = g
    return leaf_grads
