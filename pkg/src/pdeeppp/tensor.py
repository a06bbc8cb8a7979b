"""Dense tensors with tape-based reverse-mode automatic differentiation.

A :class:`Tensor` wraps a row-major numpy array (float32 by default;
float64 is supported so gradient checks can run at full precision).
Operations executed inside a ``with Tape() as tape:`` block are recorded
eagerly; ``backward(tape, loss)`` replays the tape in reverse and
accumulates gradients into every reachable leaf with ``requires_grad``.

Broadcasting is deliberately limited to bias-style adds and
scalar-times-tensor; reductions accumulate in float64 before casting
back to the working precision.
"""

import numpy as np

from . import kernels
from .errors import ContractError, EmptyInputError, NumericError, ShapeError

LOG_CLAMP = 1e-12
LAYER_NORM_EPS = 1e-5


class Tensor:
    """Shape-tagged dense array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad=False, dtype=np.float32):
        arr = np.asarray(data, dtype=dtype)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

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


class _Node:
    __slots__ = ("inputs", "output", "backward_fn")

    def __init__(self, inputs, output, backward_fn):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of primitive applications; inputs always precede use."""

    _stack = []

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc):
        Tape._stack.pop()
        return False

    @classmethod
    def active(cls):
        return cls._stack[-1] if cls._stack else None


def _record(inputs, out_data, backward_fn):
    """Wrap an op result, recording it when gradients are being traced."""
    tape = Tape.active()
    needs = any(t.requires_grad for t in inputs)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.grad = None
    out.requires_grad = needs and tape is not None
    if out.requires_grad:
        tape.nodes.append(_Node(tuple(inputs), out, backward_fn))
    return out


def backward(tape, loss):
    """Reverse-accumulate d(loss)/d(leaf) for every requires_grad leaf.

    Repeated calls without ``zero_grad`` add into existing gradients.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward expects a scalar loss, got shape {loss.shape}")
    produced = {id(n.output) for n in tape.nodes}
    if id(loss) not in produced:
        if loss.requires_grad:
            if loss.grad is None:
                loss.grad = np.zeros_like(loss.data)
            loss.grad += 1.0
        return
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g_out = grads.pop(id(node.output), None)
        if g_out is None:
            continue
        in_grads = node.backward_fn(g_out)
        for inp, g in zip(node.inputs, in_grads):
            if g is None or not inp.requires_grad:
                continue
            if id(inp) in produced:
                prev = grads.get(id(inp))
                grads[id(inp)] = g if prev is None else prev + g
            else:
                if inp.grad is None:
                    inp.grad = np.zeros_like(inp.data)
                inp.grad += g.astype(inp.data.dtype, copy=False)


def _unbroadcast(g, shape):
    """Sum gradient ``g`` down to ``shape`` after numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _as_tensor(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.dtype), dtype=like.dtype)


# ---------------------------------------------------------------------------
# elementwise / linear algebra


def add(a, b):
    b = _as_tensor(b, a)

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record((a, b), a.data + b.data, bwd)


def sub(a, b):
    b = _as_tensor(b, a)

    def bwd(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _record((a, b), a.data - b.data, bwd)


def mul(a, b):
    if not isinstance(b, Tensor):
        return scale(a, b)

    def bwd(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _record((a, b), a.data * b.data, bwd)


def scale(a, c):
    c = float(c)
    return _record((a,), a.data * np.asarray(c, dtype=a.dtype), lambda g: (g * c,))


def mul_const(a, const):
    """Elementwise product with a non-differentiable array (e.g. a mask)."""
    const = np.asarray(const, dtype=a.dtype)
    return _record((a,), a.data * const, lambda g: (g * const,))


def matmul(a, b):
    """Matrix product; batched when either operand carries leading dims."""
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul needs ndim >= 2, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")

    def bwd(g):
        da = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        db = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return da, db

    return _record((a, b), np.matmul(a.data, b.data), bwd)


def relu(a):
    pos = a.data > 0
    return _record((a,), np.where(pos, a.data, 0), lambda g: (g * pos,))


def log_clamped(a, lo=LOG_CLAMP):
    """Natural log with the argument clamped to ``[lo, inf)``."""
    inside = a.data > lo
    clamped = np.maximum(a.data, lo)
    return _record((a,), np.log(clamped),
                   lambda g: (np.where(inside, g / clamped, 0),))


def softmax(a, axis=-1):
    """Numerically stable softmax along ``axis`` (max-subtraction)."""
    if np.isnan(a.data).any():
        raise NumericError("softmax received NaN input")
    with np.errstate(invalid="ignore"):  # inf inputs surface as NaN in the loss
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _record((a,), y.astype(a.dtype), bwd)


def layer_norm(x, gain, shift, eps=LAYER_NORM_EPS):
    """Zero-mean unit-variance over the last axis, then affine."""
    if x.shape[-1] != gain.shape[-1] or gain.shape != shift.shape:
        raise ShapeError(f"layer_norm shapes disagree: {x.shape}, {gain.shape}, {shift.shape}")
    xd = x.data.astype(np.float64)
    mu = xd.mean(axis=-1, keepdims=True)
    var = xd.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xd - mu) * inv).astype(x.dtype)
    out = xhat * gain.data + shift.data

    def bwd(g):
        d = x.shape[-1]
        dxhat = g * gain.data
        mean_d = dxhat.mean(axis=-1, keepdims=True)
        mean_dx = (dxhat * xhat).mean(axis=-1, keepdims=True)
        dx = (inv * (dxhat - mean_d - xhat * mean_dx)).astype(x.dtype)
        axes = tuple(range(g.ndim - 1))
        dgain = (g * xhat).sum(axis=axes, dtype=np.float64).astype(gain.dtype)
        dshift = g.sum(axis=axes, dtype=np.float64).astype(shift.dtype)
        return dx, dgain, dshift

    return _record((x, gain, shift), out, bwd)


# ---------------------------------------------------------------------------
# reductions / reshaping


def tsum(a, axis=None):
    out = a.data.sum(axis=axis, dtype=np.float64).astype(a.dtype)

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).astype(a.dtype),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).astype(a.dtype),)

    return _record((a,), np.asarray(out), bwd)


def tmean(a, axis=None):
    n = a.data.size if axis is None else a.shape[axis]
    return scale(tsum(a, axis=axis), 1.0 / n)


def reshape(a, shape):
    return _record((a,), a.data.reshape(shape), lambda g: (g.reshape(a.shape),))


def transpose(a, axes):
    inv = np.argsort(axes)
    return _record((a,), a.data.transpose(axes), lambda g: (g.transpose(inv),))


def concat(tensors, axis=-1):
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    return _record(tuple(tensors), out,
                   lambda g: tuple(np.split(g, splits, axis=axis)))


def gather_rows(table, indices):
    """Row lookup ``table[indices]`` with scatter-add backward."""
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ContractError(
            f"index out of range for table with {table.shape[0]} rows")

    def bwd(g):
        dt = np.zeros_like(table.data)
        np.add.at(dt, indices, g)
        return (dt,)

    return _record((table,), table.data[indices], bwd)


# ---------------------------------------------------------------------------
# sequence kernels


def conv1d_same(x, w, bias):
    """Kernel-3, same-padded 1-D convolution.

    ``x`` is ``(C_in, L)`` or ``(B, C_in, L)``; ``w`` is ``(C_out, C_in, 3)``.
    """
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    if xd.shape[-1] == 0:
        raise EmptyInputError("conv1d_same on an empty sequence")
    if xd.shape[1] != w.shape[1] or w.shape[2] != 3:
        raise ShapeError(f"conv1d_same shapes disagree: x {x.shape}, w {w.shape}")
    y = kernels.conv1d_same(np.ascontiguousarray(xd),
                            np.ascontiguousarray(w.data), bias.data)

    def bwd(g):
        gb = g[None] if squeeze else g
        dx, dw, db = kernels.conv1d_same_backward(
            np.ascontiguousarray(gb), np.ascontiguousarray(xd),
            np.ascontiguousarray(w.data))
        return dx[0] if squeeze else dx, dw, db

    return _record((x, w, bias), y[0] if squeeze else y, bwd)


def adaptive_avg_pool(x, out_len, lengths=None, mask=None):
    """Adaptive average pooling of ``(C, L)`` or ``(B, C, L)`` to ``out_len`` bins.

    ``lengths`` restricts binning to a per-sample prefix and ``mask``
    excludes padded positions from the bin means; both default to the
    whole sequence.
    """
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    b, _, length = xd.shape
    if lengths is None:
        lengths = np.full(b, length, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if out_len < 1 or out_len > int(lengths.min()):
        raise ContractError(
            f"out_len {out_len} not in [1, {int(lengths.min())}]: a bin would be empty")
    if mask is None:
        mask = np.ones((b, length), dtype=np.uint8)
    mask = np.asarray(mask, dtype=np.uint8)
    y = kernels.avg_pool_masked(np.ascontiguousarray(xd), lengths, mask, out_len)

    def bwd(g):
        gb = g[None] if squeeze else g
        dx = kernels.avg_pool_masked_backward(np.ascontiguousarray(gb),
                                              lengths, mask, length)
        return (dx[0] if squeeze else dx,)

    return _record((x,), y[0] if squeeze else y, bwd)
