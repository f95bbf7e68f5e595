"""
Central finite-difference gradient checks.
"""

import numpy as np

from .tensor import ComputationTape


def numerical_gradient(loss_fn, tensor, h=1e-3):
    """Central differences of the scalar ``loss_fn()`` w.r.t. every entry of ``tensor``"""
    grad = np.zeros_like(tensor.data, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = float(loss_fn().data.reshape(-1)[0])
        flat[i] = original - h
        lower = float(loss_fn().data.reshape(-1)[0])
        flat[i] = original
        grad.reshape(-1)[i] = (upper - lower) / (2 * h)
    return grad


def analytic_gradients(loss_fn, tensors):
    for tensor in tensors:
        tensor.zero_grad()
    with ComputationTape() as tape:
        loss = loss_fn()
        tape.backward(loss)
    return [tensor.grad.astype(np.float64) for tensor in tensors]


def relative_error(analytic, numeric):
    """``||a - n|| / max(||a||, ||n||)`` over the flattened vectors"""
    a = np.concatenate([np.ravel(x) for x in analytic])
    n = np.concatenate([np.ravel(x) for x in numeric])
    scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / scale)


def check_gradients(loss_fn, tensors, h=1e-3):
    """
    Compare backward-pass gradients against central finite differences.

    ``loss_fn`` must rebuild the computation from the current tensor values on
    every call. Returns the relative error over all entries of ``tensors``.
    """
    tensors = list(tensors)
    analytic = analytic_gradients(loss_fn, tensors)
    numeric = [numerical_gradient(loss_fn, tensor, h) for tensor in tensors]
    return relative_error(analytic, numeric)
