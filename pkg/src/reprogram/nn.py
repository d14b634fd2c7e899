"""Parameters, modules, and the layers the models are built from."""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from . import ops
from .errors import ContractViolation
from .tensor import DEFAULT_DTYPE, Tensor


class Parameter:
    """A trainable tensor with a dotted path name and a freeze flag.

    Frozen parameters keep their values through every optimizer step and
    are skipped by the backward sweep (requires_grad is cleared).
    """

    __slots__ = ("tensor", "name", "frozen")

    def __init__(self, data, name: str = "", dtype=None):
        self.tensor = Tensor(data, requires_grad=True, dtype=dtype)
        self.name = name
        self.frozen = False

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @data.setter
    def data(self, value: np.ndarray):
        self.tensor.data = np.asarray(value, dtype=self.tensor.data.dtype)

    @property
    def grad(self) -> Optional[np.ndarray]:
        return self.tensor.grad

    @property
    def shape(self) -> tuple:
        return self.tensor.shape

    @property
    def size(self) -> int:
        return self.tensor.size

    def freeze(self):
        self.frozen = True
        self.tensor.requires_grad = False

    def unfreeze(self):
        self.frozen = False
        self.tensor.requires_grad = True

    def __repr__(self):
        state = "frozen" if self.frozen else "trainable"
        return f"Parameter({self.name or '?'}, shape={self.shape}, {state})"


class Module:
    """Base class tracking parameters and submodules by attribute name."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self._params[key] = value
        elif isinstance(value, Module):
            self._modules[key] = value
        object.__setattr__(self, key, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple]:
        """Yield (dotted path, Parameter); assigns each parameter its path."""
        for key, p in self._params.items():
            name = f"{prefix}{key}"
            p.name = name
            yield name, p
        for key, m in self._modules.items():
            yield from m.named_parameters(prefix=f"{prefix}{key}.")

    def parameters(self) -> list:
        params = [p for _, p in self.named_parameters()]
        if len({id(p) for p in params}) != len(params):
            raise ContractViolation("a Parameter is registered under two paths")
        return params

    def trainable_parameters(self) -> list:
        return [p for p in self.parameters() if not p.frozen]

    def freeze(self):
        for p in self.parameters():
            p.freeze()
        return self

    def unfreeze(self):
        for p in self.parameters():
            p.unfreeze()
        return self

    def num_params(self) -> int:
        return sum(p.size for p in self.parameters())

    def num_trainable(self) -> int:
        return sum(p.size for p in self.trainable_parameters())

    def state_dict(self) -> dict:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict):
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise ContractViolation(
                f"state dict mismatch: missing={missing} unexpected={extra}")
        for name, p in own.items():
            if state[name].shape != p.shape:
                raise ContractViolation(
                    f"state entry '{name}' has shape {state[name].shape}, "
                    f"expected {p.shape}")
            p.data = state[name]

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ModuleList(Module):
    def __init__(self, modules):
        super().__init__()
        self._items = []
        for i, m in enumerate(modules):
            setattr(self, str(i), m)
            self._items.append(m)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(DEFAULT_DTYPE)


class Linear(Module):
    """y = x @ W + b with W of shape [n_in, n_out]."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 zero_init: bool = False):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        if zero_init:
            w = np.zeros((n_in, n_out), dtype=DEFAULT_DTYPE)
        else:
            w = glorot_uniform(rng, (n_in, n_out), n_in, n_out)
        self.weight = Parameter(w)
        self.bias = Parameter(np.zeros(n_out, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return ops.add(ops.matmul(x, self.weight.tensor), self.bias.tensor)


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int,
                 rng: np.random.Generator, stride: int = 1, padding: int = 0,
                 zero_init: bool = False):
        super().__init__()
        self.stride, self.padding = stride, padding
        fan_in = c_in * kernel * kernel
        fan_out = c_out * kernel * kernel
        if zero_init:
            w = np.zeros((c_out, c_in, kernel, kernel), dtype=DEFAULT_DTYPE)
        else:
            w = glorot_uniform(rng, (c_out, c_in, kernel, kernel),
                               fan_in, fan_out)
        self.weight = Parameter(w)
        self.bias = Parameter(np.zeros(c_out, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight.tensor, self.bias.tensor,
                          stride=self.stride, padding=self.padding)


class LayerNorm(Module):
    def __init__(self, dim: int):
        super().__init__()
        self.gain = Parameter(np.ones(dim, dtype=DEFAULT_DTYPE))
        self.bias = Parameter(np.zeros(dim, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gain.tensor, self.bias.tensor)
