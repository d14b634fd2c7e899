"""Adam optimizer with bias correction."""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation
from .nn import Parameter


class Adam:
    """Standard Adam. Frozen parameters are ignored; gradients are zeroed
    after each step (they accumulate across backward calls until then)."""

    def __init__(self, params, lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Parameter] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {}
        self._v = {}

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p in self.params:
            if p.frozen:
                continue
            g = p.tensor.grad
            if g is None:
                raise ContractViolation(
                    f"adam step: trainable parameter '{p.name}' has no gradient")
            key = id(p)
            m = self._m.get(key)
            if m is None:
                m = self._m[key] = np.zeros_like(p.data)
                self._v[key] = np.zeros_like(p.data)
            v = self._v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.zero_grad()

    def zero_grad(self):
        for p in self.params:
            p.tensor.grad = None
