"""
Adam optimizer over named parameters.
"""

from dataclasses import dataclass, field

import numpy as np

from core.exceptions import NonFiniteError, ShapeError


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """
    Apply one bias-corrected Adam update.

    Args:
        params (Mapping[str, Tensor]): parameters, updated by replacing ``data``
        grads (Mapping[str, ndarray]): gradients keyed like ``params``; absent means zero
        state (AdamState): moments from the previous step
        lr (float): step size

    Returns:
        AdamState: the new moments and step counter
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(name, f"non-finite gradient for parameter {name}")

    step = state.step + 1
    new_m, new_v = {}, {}
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        if grad.shape != tensor.shape:
            raise ShapeError(f'adam_step[{name}]', tensor.shape, grad.shape)

        m = beta1 * state.m.get(name, 0.0) + (1 - beta1) * grad
        v = beta2 * state.v.get(name, 0.0) + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** step)
        v_hat = v / (1 - beta2 ** step)
        tensor.data = (tensor.data - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(tensor.data.dtype)
        new_m[name] = np.asarray(m, dtype=tensor.data.dtype)
        new_v[name] = np.asarray(v, dtype=tensor.data.dtype)

    return AdamState(step=step, m=new_m, v=new_v)


class Adam:
    """Stateful wrapper around ``adam_step`` for a ``ParameterSet``"""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8, max_grad_norm=None):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.max_grad_norm = max_grad_norm
        self.state = AdamState()

    def step(self, lr=None):
        grads = self.params.grads()
        if self.max_grad_norm is not None:
            total = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
            if np.isfinite(total) and total > self.max_grad_norm:
                scale = self.max_grad_norm / total
                grads = {name: g * scale for name, g in grads.items()}
        self.state = adam_step(
            dict(self.params.items()), grads, self.state,
            self.lr if lr is None else lr, self.beta1, self.beta2, self.eps
        )
        return self.state
