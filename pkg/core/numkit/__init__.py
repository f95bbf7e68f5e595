"""
numkit: the small tensor engine every model in this project trains with.
"""

from .checkpoint import FORMAT_VERSION, MAGIC, load_checkpoint, save_checkpoint
from .optim import Adam, AdamState, adam_step
from .params import ParameterSet, glorot
from .tensor import (
    ComputationTape, Tensor, add, as_tensor, backward, clip, concat, div, exp, gather, get_dtype,
    log, log_softmax, matmul, mean, minimum, mul, neg, pick, precision, relu, reshape,
    scatter_add, segment_max, sigmoid, softmax, sub, tanh, tmax, transpose, tsum,
)

__all__ = [
    'FORMAT_VERSION', 'MAGIC', 'load_checkpoint', 'save_checkpoint',
    'Adam', 'AdamState', 'adam_step', 'ParameterSet', 'glorot',
    'ComputationTape', 'Tensor', 'add', 'as_tensor', 'backward', 'clip', 'concat', 'div', 'exp',
    'gather', 'get_dtype', 'log', 'log_softmax', 'matmul', 'mean', 'minimum', 'mul', 'neg', 'pick',
    'precision', 'relu', 'reshape', 'scatter_add', 'segment_max', 'sigmoid', 'softmax', 'sub',
    'tanh', 'tmax', 'transpose', 'tsum',
]
