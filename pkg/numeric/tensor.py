"""
Reverse-mode differentiable tensors over numpy arrays.

Ops executed while a `Tape` is active (and touching at least one tensor with
`requires_grad`) are recorded in execution order together with a backward
closure. `Tape.backward(loss)` walks the record in reverse, which is a reverse
topological order, and accumulates each gradient once per use.

Outside a tape nothing is recorded, so inference pays no graph cost.

Default precision is float32; `precision(np.float64)` switches every tensor
created inside the block to float64 (used by gradient checks).
"""

import contextlib
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit

from utils.errors import NumericalError, ShapeError


class _Precision:
    dtype = np.float32


_PRECISION = _Precision()


def default_dtype():
    return _PRECISION.dtype


@contextlib.contextmanager
def precision(dtype):
    previous = _PRECISION.dtype
    _PRECISION.dtype = np.dtype(dtype).type
    try:
        yield
    finally:
        _PRECISION.dtype = previous


# -------------------------------
# Tape
# -------------------------------


@dataclass
class TapeNode:
    op: str
    inputs: tuple
    output: "Tensor"
    backward: Callable[[np.ndarray], None]


_TAPES: list["Tape"] = []


def _active_tape() -> Optional["Tape"]:
    return _TAPES[-1] if _TAPES else None


class Tape:
    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPES.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, node: TapeNode) -> None:
        self.nodes.append(node)

    def backward(self, loss: "Tensor") -> None:
        if loss.data.size != 1:
            raise ShapeError("backward", loss.shape, ())
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            g = node.output.grad
            if g is not None:
                node.backward(g)


# -------------------------------
# Tensor
# -------------------------------


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")
    # ndarray <op> Tensor dispatches to the Tensor's reflected operator
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        self.data = np.asarray(data, dtype=dtype or default_dtype())
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)


def lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    g = unbroadcast(g, t.data.shape)
    t.grad = g if t.grad is None else t.grad + g


def make_result(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    """Wrap an op's forward value and register its backward closure on the active tape."""
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"{op} produced non-finite values", stage=op)
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires)
    tape = _active_tape()
    if requires and tape is not None:
        tape.record(TapeNode(op, tuple(inputs), out, backward))
    return out


def _broadcast_check(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


# -------------------------------
# Elementwise
# -------------------------------


def add(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    _broadcast_check("add", a, b)

    def backward(g):
        accumulate(a, g)
        accumulate(b, g)

    return make_result("add", a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    _broadcast_check("sub", a, b)

    def backward(g):
        accumulate(a, g)
        accumulate(b, -g)

    return make_result("sub", a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    _broadcast_check("mul", a, b)

    def backward(g):
        accumulate(a, g * b.data)
        accumulate(b, g * a.data)

    return make_result("mul", a.data * b.data, (a, b), backward)


def neg(a) -> Tensor:
    a = lift(a)
    return make_result("neg", -a.data, (a,), lambda g: accumulate(a, -g))


def sigmoid(a) -> Tensor:
    a = lift(a)
    y = expit(a.data)
    return make_result("sigmoid", y, (a,), lambda g: accumulate(a, g * y * (1.0 - y)))


def tanh(a) -> Tensor:
    a = lift(a)
    y = np.tanh(a.data)
    return make_result("tanh", y, (a,), lambda g: accumulate(a, g * (1.0 - y * y)))


_GELU_K = np.sqrt(2.0 / np.pi)
_GELU_C = 0.044715


def gelu(a) -> Tensor:
    """tanh approximation of GELU; smooth everywhere."""
    a = lift(a)
    x = a.data
    t = np.tanh(_GELU_K * (x + _GELU_C * x**3))
    y = 0.5 * x * (1.0 + t)

    def backward(g):
        dt = (1.0 - t * t) * _GELU_K * (1.0 + 3.0 * _GELU_C * x * x)
        accumulate(a, g * (0.5 * (1.0 + t) + 0.5 * x * dt))

    return make_result("gelu", y, (a,), backward)


# -------------------------------
# Linear algebra and shape ops
# -------------------------------


def matmul(a, b) -> Tensor:
    """numpy `@` semantics, 1-D operands included: a vector is promoted and the added axis dropped."""
    a, b = lift(a), lift(b)
    if a.ndim == 0 or b.ndim == 0:
        raise ShapeError("matmul", a.shape, b.shape)
    if a.ndim == 1 or b.ndim == 1:
        left = reshape(a, (1,) + a.shape) if a.ndim == 1 else a
        right = reshape(b, b.shape + (1,)) if b.ndim == 1 else b
        out = matmul(left, right)
        shape = out.shape
        if a.ndim == 1:
            shape = shape[:-2] + shape[-1:]
        if b.ndim == 1:
            shape = shape[:-1]
        return reshape(out, shape)
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError("matmul", a.shape, b.shape) from None

    def backward(g):
        if a.requires_grad:
            accumulate(a, g @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            accumulate(b, np.swapaxes(a.data, -1, -2) @ g)

    return make_result("matmul", a.data @ b.data, (a, b), backward)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    ts = [lift(t) for t in tensors]
    if not ts:
        raise ShapeError("concat")
    ndim = ts[0].ndim
    ax = axis % ndim
    for t in ts[1:]:
        if t.ndim != ndim or any(t.shape[i] != ts[0].shape[i] for i in range(ndim) if i != ax):
            raise ShapeError("concat", ts[0].shape, t.shape)
    sizes = [t.shape[ax] for t in ts]
    cuts = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, part in zip(ts, np.split(g, cuts, axis=ax)):
            accumulate(t, part)

    return make_result("concat", np.concatenate([t.data for t in ts], axis=ax), ts, backward)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [lift(t) for t in tensors]
    for t in ts[1:]:
        if t.shape != ts[0].shape:
            raise ShapeError("stack", ts[0].shape, t.shape)
    data = np.stack([t.data for t in ts], axis=axis)
    ax = axis % data.ndim

    def backward(g):
        for i, t in enumerate(ts):
            accumulate(t, np.take(g, i, axis=ax))

    return make_result("stack", data, ts, backward)


def getitem(a, key) -> Tensor:
    """Basic indexing only (ints, slices, Ellipsis)."""
    a = lift(a)

    def backward(g):
        full = np.zeros_like(a.data)
        full[key] = g
        accumulate(a, full)

    return make_result("getitem", a.data[key], (a,), backward)


def reshape(a, shape) -> Tensor:
    a = lift(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(shape)) from None
    return make_result("reshape", data, (a,), lambda g: accumulate(a, g.reshape(a.shape)))


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = lift(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result(
        "transpose", np.transpose(a.data, axes), (a,), lambda g: accumulate(a, np.transpose(g, inverse))
    )


def swap_last(a) -> Tensor:
    a = lift(a)
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


# -------------------------------
# Reductions and normalizations
# -------------------------------


def sum_all(a) -> Tensor:
    a = lift(a)
    return make_result(
        "sum_all", np.asarray(a.data.sum()), (a,), lambda g: accumulate(a, np.broadcast_to(g, a.shape))
    )


def mean(a) -> Tensor:
    a = lift(a)
    n = a.data.size
    return make_result(
        "mean", np.asarray(a.data.mean()), (a,), lambda g: accumulate(a, np.broadcast_to(g / n, a.shape))
    )


def softmax(a, axis: int = -1) -> Tensor:
    a = lift(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        accumulate(a, y * (g - (g * y).sum(axis=axis, keepdims=True)))

    return make_result("softmax", y, (a,), backward)


LAYER_NORM_EPS = 1e-5


def layer_norm(a, axis: int = -1, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize to zero mean and unit variance along `axis` (no affine part)."""
    a = lift(a)
    x = a.data
    n = x.shape[axis]
    mu = x.mean(axis=axis, keepdims=True)
    var = x.var(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std

    def backward(g):
        gsum = g.sum(axis=axis, keepdims=True)
        gxsum = (g * xhat).sum(axis=axis, keepdims=True)
        accumulate(a, inv_std / n * (n * g - gsum - xhat * gxsum))

    return make_result("layer_norm", xhat, (a,), backward)
