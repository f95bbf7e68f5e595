"""
Named parameter bundles shared by every trainable model.
"""

import numpy as np

from core.exceptions import CheckpointError, NonFiniteError
from .tensor import Tensor, get_dtype


def glorot(rng, fan_in, fan_out):
    """Uniform Glorot initialisation"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class ParameterSet:
    """
    Ordered mapping of parameter name to trainable ``Tensor``.
    """

    def __init__(self):
        self._params = {}

    def add(self, name, data):
        tensor = Tensor(np.array(data, dtype=get_dtype()), requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def linear(self, name, rng, fan_in, fan_out, zero=False):
        """Register ``{name}.weight`` and ``{name}.bias`` for an affine map"""
        weight = np.zeros((fan_in, fan_out)) if zero else glorot(rng, fan_in, fan_out)
        self.add(f"{name}.weight", weight)
        self.add(f"{name}.bias", np.zeros(fan_out))

    def affine(self, name, x):
        """``x @ {name}.weight + {name}.bias``"""
        return x @ self._params[f"{name}.weight"] + self._params[f"{name}.bias"]

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def num_parameters(self):
        return int(sum(p.size for p in self._params.values()))

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.zero_grad()

    def grads(self):
        return {
            name: tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            for name, tensor in self._params.items()
        }

    def freeze(self):
        for tensor in self._params.values():
            tensor.requires_grad = False
            tensor.grad = None

    def unfreeze(self):
        for tensor in self._params.values():
            tensor.requires_grad = True

    @property
    def frozen(self):
        return not any(t.requires_grad for t in self._params.values())

    def state_dict(self):
        return {name: tensor.data.copy() for name, tensor in self._params.items()}

    def load_state_dict(self, state, strict=True):
        missing = [name for name in self._params if name not in state]
        unexpected = [name for name in state if name not in self._params]
        if strict and (missing or unexpected):
            raise CheckpointError(
                f"parameter names differ: missing={missing} unexpected={unexpected}",
                code='parameter_mismatch'
            )
        for name, tensor in self._params.items():
            if name not in state:
                continue
            value = np.asarray(state[name])
            if value.shape != tensor.shape:
                raise CheckpointError(
                    f"parameter {name}: checkpoint shape {value.shape} != model shape {tensor.shape}",
                    code='parameter_mismatch'
                )
            tensor.data = value.astype(tensor.data.dtype, copy=True)

    def assert_finite(self):
        for name, tensor in self._params.items():
            if not np.all(np.isfinite(tensor.data)):
                raise NonFiniteError(name)

    def astype(self, dtype):
        """Cast every parameter in place (used by gradient checks)"""
        for tensor in self._params.values():
            tensor.data = tensor.data.astype(dtype)
            tensor.grad = None
