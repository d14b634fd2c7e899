"""Finite-difference gradient checking.

The numerical side never touches the reverse-mode machinery: it perturbs
raw float64 buffers and re-runs the forward function, so it stays an
independent oracle for the analytic gradients.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def finite_difference_grad(fn, tensors, wrt: int, h: float = 1e-4) -> np.ndarray:
    """Central-difference d fn / d tensors[wrt], evaluated in float64.

    ``fn(*tensors)`` must return a scalar Tensor. The perturbed tensor's
    buffer is modified in place and restored.
    """
    target = tensors[wrt]
    flat = target.data.reshape(-1)
    grad = np.zeros(flat.shape, dtype=np.float64)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = fn(*tensors).item()
        flat[i] = orig - h
        down = fn(*tensors).item()
        flat[i] = orig
        grad[i] = (up - down) / (2.0 * h)
    return grad.reshape(target.shape)


def check_gradients(fn, tensors, rtol: float = 1e-4, h: float = 1e-4) -> float:
    """Compare reverse-mode gradients of ``fn`` against central differences.

    Runs fn once, backpropagates, and checks every input tensor that
    requires grad. Returns the worst relative error seen; raises
    AssertionError above ``rtol``. Inputs should be float64 for the oracle
    to have headroom.
    """
    for t in tensors:
        t.grad = None
    loss = fn(*tensors)
    loss.backward()
    worst = 0.0
    for i, t in enumerate(tensors):
        if not t.requires_grad:
            continue
        assert t.grad is not None, f"input {i} requires grad but got none"
        numeric = finite_difference_grad(fn, tensors, i, h=h)
        scale = max(np.abs(numeric).max(), 1e-6)
        err = np.abs(t.grad.astype(np.float64) - numeric).max() / scale
        worst = max(worst, float(err))
        assert err < rtol, (
            f"gradient mismatch on input {i}: rel err {err:.3e} >= {rtol:.0e}")
    return worst
