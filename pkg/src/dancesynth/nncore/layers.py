"""Parameter containers and the layer set used by both pipeline stages."""

import math

import numpy as np

from ..errors import DimensionError, ValidationError
from . import tensor as T
from .conv import conv1d, conv2d, conv2d_transpose
from .tensor import Tensor


class ParamSet:
    """Named trainable tensors, iterated in lexicographic name order."""

    def __init__(self):
        self._tensors = {}

    def add(self, name, values):
        if name in self._tensors:
            raise ValidationError(f"duplicate parameter name {name!r}")
        t = Tensor(values, requires_grad=True, name=name)
        self._tensors[name] = t
        return t

    def __getitem__(self, name):
        return self._tensors[name]

    def __contains__(self, name):
        return name in self._tensors

    def __len__(self):
        return len(self._tensors)

    def names(self):
        return sorted(self._tensors)

    def items(self):
        return [(n, self._tensors[n]) for n in self.names()]

    def zero_grad(self):
        for t in self._tensors.values():
            t.grad = None

    def num_values(self):
        return sum(t.size for t in self._tensors.values())

    def state(self):
        """Copies of the parameter values keyed by name."""
        return {n: t.data.copy() for n, t in self.items()}

    def load_state(self, arrays):
        """Overwrite values in place so layers holding references see them."""
        missing = set(self._tensors) - set(arrays)
        if missing:
            raise ValidationError(f"checkpoint lacks parameters: {sorted(missing)}")
        for name, t in self._tensors.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise DimensionError(f"parameter {name}: checkpoint shape {arr.shape} vs {t.shape}")
            t.data = arr.copy()


def uniform_init(rng, shape, fan_in, gain=1.0):
    """Uniform in ``+-gain * sqrt(1 / fan_in)``; ``gain = sqrt(6)`` is He init for ReLU stacks."""
    bound = gain * math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


HE_GAIN = math.sqrt(6.0)


def dense(x, weight, bias=None):
    y = T.matmul(x, weight)
    return y if bias is None else y + bias


class Dense:
    def __init__(self, params, name, n_in, n_out, rng, gain=1.0):
        self.weight = params.add(f"{name}.weight", uniform_init(rng, (n_in, n_out), n_in, gain))
        self.bias = params.add(f"{name}.bias", np.zeros(n_out))

    def __call__(self, x):
        return dense(x, self.weight, self.bias)


class Embedding:
    def __init__(self, params, name, vocab, dim, rng):
        self.weight = params.add(f"{name}.weight", uniform_init(rng, (vocab, dim), vocab))

    def __call__(self, ids):
        return self.weight[np.asarray(ids)]


class Conv1d:
    def __init__(self, params, name, c_in, c_out, kernel, rng, stride=1, pad=0, gain=1.0):
        self.weight = params.add(f"{name}.weight", uniform_init(rng, (c_out, c_in, kernel), c_in * kernel, gain))
        self.bias = params.add(f"{name}.bias", np.zeros(c_out))
        self.stride, self.pad = stride, pad

    def __call__(self, x):
        return conv1d(x, self.weight, self.bias, self.stride, self.pad)


class Conv2d:
    def __init__(self, params, name, c_in, c_out, kernel, rng, stride=1, pad=0, gain=1.0):
        k = kernel
        self.weight = params.add(f"{name}.weight", uniform_init(rng, (c_out, c_in, k, k), c_in * k * k, gain))
        self.bias = params.add(f"{name}.bias", np.zeros(c_out))
        self.stride, self.pad = stride, pad

    def __call__(self, x):
        return conv2d(x, self.weight, self.bias, self.stride, self.pad)


class ConvTranspose2d:
    def __init__(self, params, name, c_in, c_out, kernel, rng, stride=1, pad=0, gain=1.0):
        k = kernel
        self.weight = params.add(f"{name}.weight", uniform_init(rng, (c_in, c_out, k, k), c_in * k * k, gain))
        self.bias = params.add(f"{name}.bias", np.zeros(c_out))
        self.stride, self.pad = stride, pad

    def __call__(self, x):
        return conv2d_transpose(x, self.weight, self.bias, self.stride, self.pad)


def gru_cell(x, h, w_ih, w_hh, b_ih, b_hh):
    """One GRU update with PyTorch gate ordering (reset, update, new).

    ``w_ih`` is ``(D_in, 3H)`` and ``w_hh`` is ``(H, 3H)``; ``x`` and ``h``
    may carry leading batch axes.
    """
    x, h = T.as_tensor(x), T.as_tensor(h)
    H = h.shape[-1]
    if w_hh.shape != (H, 3 * H):
        raise DimensionError(f"w_hh shape {w_hh.shape} vs hidden size {H}", axis=-1)
    if x.shape[-1] != w_ih.shape[0]:
        raise DimensionError(f"input size {x.shape[-1]} vs w_ih rows {w_ih.shape[0]}", axis=-1)
    gi = T.matmul(x, w_ih) + b_ih
    gh = T.matmul(h, w_hh) + b_hh
    r = T.sigmoid(gi[..., :H] + gh[..., :H])
    z = T.sigmoid(gi[..., H: 2 * H] + gh[..., H: 2 * H])
    n = T.tanh(gi[..., 2 * H:] + r * gh[..., 2 * H:])
    return (1.0 - z) * n + z * h


class GRUCell:
    def __init__(self, params, name, n_in, n_hidden, rng):
        self.w_ih = params.add(f"{name}.w_ih", uniform_init(rng, (n_in, 3 * n_hidden), n_in))
        self.w_hh = params.add(f"{name}.w_hh", uniform_init(rng, (n_hidden, 3 * n_hidden), n_hidden))
        self.b_ih = params.add(f"{name}.b_ih", np.zeros(3 * n_hidden))
        self.b_hh = params.add(f"{name}.b_hh", np.zeros(3 * n_hidden))
        self.hidden = n_hidden

    def __call__(self, x, h):
        return gru_cell(x, h, self.w_ih, self.w_hh, self.b_ih, self.b_hh)
