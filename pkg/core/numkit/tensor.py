"""
Dense tensors with tape-based reverse-mode automatic differentiation.

Operations record themselves on the innermost active ``ComputationTape``
whenever one of their inputs requires gradients. Outside a tape every
operation is a plain numpy computation.
"""

import contextlib

import numpy as np

from core.exceptions import NumkitError, ShapeError

_DTYPES = [np.float32]
_TAPES = []


def get_dtype():
    """Floating point type new tensors are created with"""
    return _DTYPES[-1]


@contextlib.contextmanager
def precision(dtype):
    """Temporarily create tensors with another float type (gradient checks use float64)"""
    _DTYPES.append(np.dtype(dtype).type)
    try:
        yield
    finally:
        _DTYPES.pop()


def _active_tape():
    return _TAPES[-1] if _TAPES else None


class _Node:
    __slots__ = ('index', 'output', 'inputs', 'backward_fn')

    def __init__(self, index, output, inputs, backward_fn):
        self.index = index
        self.output = output
        self.inputs = inputs
        self.backward_fn = backward_fn


class ComputationTape:
    """
    Ordered record of primitive operations.

    Nodes are appended as operations execute, so the record is already in
    topological order and the backward pass walks it once in reverse.
    """

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPES.remove(self)
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, output, inputs, backward_fn):
        node = _Node(len(self.nodes), output, inputs, backward_fn)
        self.nodes.append(node)
        output._node = node
        output._tape = self

    def backward(self, loss):
        """Populate ``grad`` on every leaf reachable from ``loss`` (additively)"""
        if loss.data.size != 1:
            raise NumkitError(f"backward needs a scalar loss, got shape {loss.shape}", code='non_scalar')
        if loss._node is None or loss._tape is not self:
            raise NumkitError("loss was not recorded on this tape", code='not_on_tape')

        pending = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes[:loss._node.index + 1]):
            grad = pending.pop(id(node.output), None)
            if grad is None:
                continue
            for tensor, input_grad in zip(node.inputs, node.backward_fn(grad)):
                if input_grad is None or not tensor.requires_grad:
                    continue
                input_grad = np.asarray(input_grad, dtype=tensor.data.dtype).reshape(tensor.shape)
                if tensor._tape is self:
                    key = id(tensor)
                    pending[key] = pending[key] + input_grad if key in pending else input_grad
                elif tensor.grad is None:
                    tensor.grad = input_grad.copy()
                else:
                    tensor.grad = tensor.grad + input_grad


def backward(loss):
    """Run the backward pass on the tape ``loss`` was recorded on"""
    if getattr(loss, '_tape', None) is None:
        raise NumkitError("loss was not recorded on any tape", code='not_on_tape')
    loss._tape.backward(loss)


class Tensor:
    """Row-major float array with an optional gradient buffer of the same shape"""

    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=get_dtype())
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._node = None
        self._tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise NumkitError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def detach(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ''
        return f"Tensor(shape={self.shape}{label})"

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

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data, inputs, backward_fn):
    out = Tensor(data)
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward_fn)
    return out


def _unbroadcast(grad, shape):
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def _expand_reduced(grad, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(grad, shape)
    if not keepdims:
        grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape)


# elementwise arithmetic

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('add', a, b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('sub', a, b)
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('mul', a, b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('div', a, b)
    return _make(a.data / b.data, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def neg(x):
    x = as_tensor(x)
    return _make(-x.data, (x,), lambda g: (-g,))


def minimum(a, b):
    """Elementwise minimum; ties send the gradient to ``a``"""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('minimum', a, b)
    take_a = a.data <= b.data
    return _make(np.minimum(a.data, b.data), (a, b),
                 lambda g: (_unbroadcast(g * take_a, a.shape), _unbroadcast(g * ~take_a, b.shape)))


def clip(x, low, high):
    x = as_tensor(x)
    inside = (x.data >= low) & (x.data <= high)
    return _make(np.clip(x.data, low, high), (x,), lambda g: (g * inside,))


# nonlinearities

def relu(x):
    x = as_tensor(x)
    return _make(np.maximum(x.data, 0), (x,), lambda g: (g * (x.data > 0),))


def tanh(x):
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _make(y, (x,), lambda g: (g * (1 - y * y),))


def sigmoid(x):
    x = as_tensor(x)
    y = np.where(x.data >= 0,
                 1 / (1 + np.exp(-np.abs(x.data))),
                 np.exp(-np.abs(x.data)) / (1 + np.exp(-np.abs(x.data))))
    return _make(y, (x,), lambda g: (g * y * (1 - y),))


def exp(x):
    x = as_tensor(x)
    y = np.exp(x.data)
    return _make(y, (x,), lambda g: (g * y,))


def log(x):
    x = as_tensor(x)
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,))


def softmax(x, axis=-1):
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    return _make(y, (x,), lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),))


def log_softmax(x, axis=-1):
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse
    probs = np.exp(y)
    return _make(y, (x,), lambda g: (g - probs * g.sum(axis=axis, keepdims=True),))


# reductions

def tsum(x, axis=None, keepdims=False):
    x = as_tensor(x)
    return _make(x.data.sum(axis=axis, keepdims=keepdims), (x,),
                 lambda g: (_expand_reduced(g, x.shape, axis, keepdims),))


def mean(x, axis=None, keepdims=False):
    x = as_tensor(x)
    count = x.data.size if axis is None else x.shape[axis]
    return _make(x.data.mean(axis=axis, keepdims=keepdims), (x,),
                 lambda g: (_expand_reduced(g, x.shape, axis, keepdims) / count,))


def tmax(x, axis=None, keepdims=False):
    """Max-reduce; the gradient flows to the first maximal entry"""
    x = as_tensor(x)
    if axis is None:
        flat = x.data.reshape(-1)
        winner = int(flat.argmax())

        def backward_all(g):
            grad = np.zeros_like(flat)
            grad[winner] = np.asarray(g).reshape(-1)[0]
            return (grad.reshape(x.shape),)

        value = flat[winner]
        return _make(value.reshape((1,) * x.ndim) if keepdims else value, (x,), backward_all)

    winners = np.expand_dims(x.data.argmax(axis=axis), axis)
    value = np.take_along_axis(x.data, winners, axis=axis)

    def backward_axis(g):
        grad = np.zeros_like(x.data)
        g = g if keepdims else np.expand_dims(g, axis)
        np.put_along_axis(grad, winners, g, axis=axis)
        return (grad,)

    return _make(value if keepdims else np.squeeze(value, axis=axis), (x,), backward_axis)


# linear algebra and shape

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul', a.shape, b.shape)
    return _make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def transpose(x):
    x = as_tensor(x)
    if x.ndim != 2:
        raise ShapeError('transpose', x.shape)
    return _make(x.data.T, (x,), lambda g: (g.T,))


def reshape(x, shape):
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError('reshape', x.shape, tuple(shape)) from None
    return _make(out, (x,), lambda g: (g.reshape(x.shape),))


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError('concat', *[t.shape for t in tensors]) from None
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return _make(out, tuple(tensors), lambda g: tuple(np.split(g, splits, axis=axis)))


# graph aggregation

def gather(x, index):
    """Rows of ``x`` selected by an integer index array"""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)

    def backward_fn(g):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, g)
        return (grad,)

    return _make(x.data[index], (x,), backward_fn)


def pick(x, rows, cols):
    """Single entries ``x[rows[i], cols[i]]``"""
    x = as_tensor(x)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)

    def backward_fn(g):
        grad = np.zeros_like(x.data)
        np.add.at(grad, (rows, cols), g)
        return (grad,)

    return _make(x.data[rows, cols], (x,), backward_fn)


def scatter_add(x, index, size):
    """Sum rows of ``x`` into ``size`` buckets given by ``index``"""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    out = np.zeros((size,) + x.shape[1:], dtype=x.data.dtype)
    np.add.at(out, index, x.data)
    return _make(out, (x,), lambda g: (g[index],))


def segment_max(x, segments, size):
    """Column-wise max of the rows belonging to each segment (empty segments give 0)"""
    x = as_tensor(x)
    segments = np.asarray(segments, dtype=np.int64)
    if x.ndim != 2 or segments.shape[0] != x.shape[0]:
        raise ShapeError('segment_max', x.shape, segments.shape)
    columns = np.arange(x.shape[1])
    out = np.zeros((size, x.shape[1]), dtype=x.data.dtype)
    winners = np.full((size, x.shape[1]), -1, dtype=np.int64)
    for segment in range(size):
        rows = np.flatnonzero(segments == segment)
        if rows.size == 0:
            continue
        block = x.data[rows]
        best = block.argmax(axis=0)
        out[segment] = block[best, columns]
        winners[segment] = rows[best]

    def backward_fn(g):
        grad = np.zeros_like(x.data)
        filled = winners >= 0
        target_rows = winners[filled]
        target_cols = np.broadcast_to(columns, winners.shape)[filled]
        np.add.at(grad, (target_rows, target_cols), g[filled])
        return (grad,)

    return _make(out, (x,), backward_fn)
