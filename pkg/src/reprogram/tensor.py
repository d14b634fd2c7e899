"""Dense tensors with reverse-mode automatic differentiation.

A Tensor wraps a numpy array. Operations on tensors (see ops.py) record a
GraphNode when any input requires gradient; backward() replays the tape in
reverse topological order. The tape is rebuilt on every forward pass and
discarded after backward.

Model math runs in float32 by default; tests pass float64 explicitly where
an oracle needs the headroom. Gradients accumulate across backward calls
until explicitly zeroed.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import UsageError

DEFAULT_DTYPE = np.float32

# When False (inside no_grad()), ops never record graph nodes.
_grad_enabled = True


class no_grad:
    """Context manager disabling tape recording, for inference passes."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled() -> bool:
    return _grad_enabled


class GraphNode:
    """One recorded operation: producing op name, inputs, and a pull-back.

    ``backward_fn`` maps the gradient at the node's output to a tuple of
    gradients, one per parent (entries may be None for non-differentiable
    or constant parents).
    """

    __slots__ = ("op", "parents", "backward_fn")

    def __init__(self, op: str, parents: Sequence["Tensor"],
                 backward_fn: Callable[[np.ndarray], tuple]):
        self.op = op
        self.parents = tuple(parents)
        self.backward_fn = backward_fn


class Tensor:
    """N-dimensional real array, optionally a node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "node")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=dtype or DEFAULT_DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[GraphNode] = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        flags = []
        if self.requires_grad:
            flags.append("grad")
        if self.node is not None:
            flags.append(self.node.op)
        tag = (" [" + ",".join(flags) + "]") if flags else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{tag})"

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    # -- graph plumbing ------------------------------------------------

    def detach(self) -> "Tensor":
        """A view of the same data cut off from the graph."""
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> int:
        """Reverse-mode sweep from a scalar.

        Accumulates d(self)/d(t) into ``t.grad`` for every reachable tensor
        with requires_grad. Returns the number of graph nodes visited, which
        doubles as the traversal-cost instrumentation for the skip-adapter
        speed comparison.
        """
        if self.size != 1:
            raise UsageError(
                f"backward() requires a scalar; got shape {self.shape}")
        # Topological order over the recorded tape, each node once.
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            t, expanded = stack.pop()
            if expanded:
                order.append(t)
                continue
            if id(t) in seen or t.node is None:
                continue
            seen.add(id(t))
            stack.append((t, True))
            for p in t.node.parents:
                if p.node is not None and id(p) not in seen:
                    stack.append((p, False))

        local: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        self._accumulate(local[id(self)])
        visited = 0
        for t in reversed(order):
            g = local.pop(id(t), None)
            if g is None:
                continue
            visited += 1
            parent_grads = t.node.backward_fn(g)
            for p, pg in zip(t.node.parents, parent_grads):
                if pg is None:
                    continue
                if p.node is not None:
                    acc = local.get(id(p))
                    local[id(p)] = pg if acc is None else acc + pg
                    p._accumulate(pg)
                else:
                    p._accumulate(pg)
        return visited

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zeros(shape, requires_grad=False, dtype=None):
        return Tensor(np.zeros(shape, dtype=dtype or DEFAULT_DTYPE),
                      requires_grad=requires_grad, dtype=dtype)

    @staticmethod
    def ones(shape, requires_grad=False, dtype=None):
        return Tensor(np.ones(shape, dtype=dtype or DEFAULT_DTYPE),
                      requires_grad=requires_grad, dtype=dtype)

    # -- operator sugar (definitions live in ops.py) --------------------

    def __add__(self, other):
        from . import ops
        return ops.add(self, _wrap(other, self.dtype))

    def __radd__(self, other):
        from . import ops
        return ops.add(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, _wrap(other, self.dtype))

    def __rmul__(self, other):
        from . import ops
        return ops.mul(_wrap(other, self.dtype), self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, _wrap(other, self.dtype))

    def __rsub__(self, other):
        from . import ops
        return ops.sub(_wrap(other, self.dtype), self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, _wrap(other, self.dtype))

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, _wrap(other, self.dtype))

    def __getitem__(self, idx):
        from . import ops
        return ops.slice_(self, idx)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, axes):
        from . import ops
        return ops.transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        from . import ops
        return ops.sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)


def _wrap(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype), dtype=dtype)


def as_tensor(x, dtype=None) -> Tensor:
    """Wrap arrays/scalars as a constant Tensor (no copy for matching dtype)."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)
