"""Differentiable operations on tensors.

Every op computes its result with numpy and, when an input requires
gradient (and recording is enabled), attaches a GraphNode whose pull-back
maps the output gradient to per-input gradients. Results preserve the
input dtype, so oracles can run the same graph in float64.

Convolution uses an im2col + matmul fast path; the short-time Fourier
magnitude is a single fused op whose adjoint is computed with an inverse
FFT rather than an explicit DFT matrix.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError
from .tensor import GraphNode, Tensor, grad_enabled


def _make(out_data: np.ndarray, op: str, parents, backward_fn) -> Tensor:
    requires = grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(out_data, requires_grad=requires, dtype=out_data.dtype)
    if requires:
        out.node = GraphNode(op, parents, backward_fn)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic

def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(out, "add", (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(out, "sub", (a, b), backward)


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, "neg", (a,), lambda g: (-g,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def backward(g):
        return (_unbroadcast(g * b.data, a.shape),
                _unbroadcast(g * a.data, b.shape))

    return _make(out, "mul", (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    out = a.data / b.data

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _make(out, "div", (a, b), backward)


def relu(a: Tensor) -> Tensor:
    out = np.maximum(a.data, 0)

    def backward(g):
        return (g * (a.data > 0),)

    return _make(out, "relu", (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1 - out * out),)

    return _make(out, "tanh", (a,), backward)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _make(out, "exp", (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    out = np.log(a.data)
    return _make(out, "log", (a,), lambda g: (g / a.data,))


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return _make(out, "sqrt", (a,), lambda g: (g * 0.5 / out,))


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(
            f"matmul needs >=2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"matmul inner axes differ: left axis -1 is {a.shape[-1]}, "
            f"right axis -2 is {b.shape[-2]}")
    out = a.data @ b.data

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(out, "matmul", (a, b), backward)


# ---------------------------------------------------------------------------
# reductions and shape ops

def _reduce_count(shape, axis):
    if axis is None:
        return int(np.prod(shape)) if shape else 1
    if isinstance(axis, tuple):
        return int(np.prod([shape[ax] for ax in axis]))
    return shape[axis]


def sum_(a: Tensor, axis=None, keepdims=False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(np.asarray(out), "sum", (a,), backward)


def mean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    count = _reduce_count(a.shape, axis)
    out = a.data.mean(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _make(np.asarray(out), "mean", (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    out = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(a.shape),)

    return _make(out, "reshape", (a,), backward)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    out = a.data.transpose(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (g.transpose(inverse),)

    return _make(out, "transpose", (a,), backward)


def broadcast_to(a: Tensor, shape) -> Tensor:
    out = np.ascontiguousarray(np.broadcast_to(a.data, shape))

    def backward(g):
        return (_unbroadcast(g, a.shape),)

    return _make(out, "broadcast_to", (a,), backward)


def slice_(a: Tensor, idx) -> Tensor:
    out = a.data[idx]

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] += g
        return (full,)

    return _make(np.ascontiguousarray(out), "slice", (a,), backward)


def concat(tensors, axis: int) -> Tensor:
    tensors = list(tensors)
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.ascontiguousarray(p)
                     for p in np.split(g, splits, axis=axis))

    return _make(out, "concat", tensors, backward)


def pad_last2(a: Tensor, pad_h: tuple, pad_w: tuple, value: float = 0.0) -> Tensor:
    """Constant-pad the last two axes by (before, after) amounts."""
    pads = [(0, 0)] * (a.ndim - 2) + [tuple(pad_h), tuple(pad_w)]
    out = np.pad(a.data, pads, constant_values=value)
    sl = tuple([slice(None)] * (a.ndim - 2)
               + [slice(pad_h[0], pad_h[0] + a.shape[-2]),
                  slice(pad_w[0], pad_w[0] + a.shape[-1])])

    def backward(g):
        return (np.ascontiguousarray(g[sl]),)

    return _make(out, "pad_last2", (a,), backward)


# ---------------------------------------------------------------------------
# nonlinear blocks

def softmax(a: Tensor, axis: int = -1) -> Tensor:
    if np.isnan(a.data).any():
        raise NumericError("softmax input contains NaN")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return ((g - dot) * out,)

    return _make(out, "softmax", (a,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(
            f"layer_norm gain/bias must have shape ({d},), got "
            f"{gain.shape} and {bias.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def backward(g):
        batch_axes = tuple(range(g.ndim - 1))
        dgain = (g * xhat).sum(axis=batch_axes)
        dbias = g.sum(axis=batch_axes)
        dxhat = g * gain.data
        dx = inv * (dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, dgain, dbias

    return _make(out, "layer_norm", (x, gain, bias), backward)


def cross_entropy(x: Tensor, targets, from_logits: bool = True) -> Tensor:
    """Mean negative log-likelihood of integer targets.

    ``x`` is [N, K] logits by default; pass from_logits=False when the rows
    are already probabilities (they are clamped at 1e-12 before the log).
    """
    targets = np.asarray(targets)
    if x.ndim != 2:
        raise ShapeError(f"cross_entropy expects [N, K] input, got {x.shape}")
    n, k = x.shape
    if targets.shape != (n,):
        raise ShapeError(
            f"cross_entropy targets must have shape ({n},), got {targets.shape}")
    if targets.min() < 0 or targets.max() >= k:
        bad = targets[(targets < 0) | (targets >= k)]
        raise IndexError(
            f"cross_entropy target(s) {bad.tolist()} out of range [0, {k})")
    rows = np.arange(n)

    if from_logits:
        m = x.data.max(axis=1, keepdims=True)
        z = x.data - m
        lse = np.log(np.exp(z).sum(axis=1))
        losses = lse - z[rows, targets]
        out = np.asarray(losses.mean(dtype=x.dtype), dtype=x.dtype)

        def backward(g):
            p = np.exp(z - np.log(np.exp(z).sum(axis=1, keepdims=True)))
            p[rows, targets] -= 1
            return ((g / n) * p,)
    else:
        p = np.maximum(x.data[rows, targets], 1e-12)
        out = np.asarray(-np.log(p).mean(dtype=x.dtype), dtype=x.dtype)

        def backward(g):
            dx = np.zeros_like(x.data)
            dx[rows, targets] = -(g / n) / p
            return (dx,)

    return _make(out, "cross_entropy", (x,), backward)


# ---------------------------------------------------------------------------
# convolution

def _conv_out_size(n: int, k: int, stride: int, pad: int) -> int:
    return (n + 2 * pad - k) // stride + 1


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x.shape
    oh = _conv_out_size(h, kh, stride, pad)
    ow = _conv_out_size(w, kw, stride, pad)
    img = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    col = np.empty((n, c, kh, kw, oh, ow), dtype=x.dtype)
    for i in range(kh):
        i_max = i + stride * oh
        for j in range(kw):
            j_max = j + stride * ow
            col[:, :, i, j] = img[:, :, i:i_max:stride, j:j_max:stride]
    return col.reshape(n, c * kh * kw, oh * ow), oh, ow


def _col2im(col: np.ndarray, x_shape, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x_shape
    oh = _conv_out_size(h, kh, stride, pad)
    ow = _conv_out_size(w, kw, stride, pad)
    col = col.reshape(n, c, kh, kw, oh, ow)
    img = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=col.dtype)
    for i in range(kh):
        i_max = i + stride * oh
        for j in range(kw):
            j_max = j + stride * ow
            img[:, :, i:i_max:stride, j:j_max:stride] += col[:, :, i, j]
    if pad:
        return img[:, :, pad:pad + h, pad:pad + w]
    return img


def conv2d(x: Tensor, w: Tensor, b: Tensor = None, stride: int = 1,
           padding: int = 0) -> Tensor:
    """Cross-correlation of [N,C,H,W] input with [K,C,kh,kw] kernels."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(
            f"conv2d expects 4-d input and kernel, got {x.shape} and {w.shape}")
    n, c, h, wd = x.shape
    k, cw, kh, kw = w.shape
    if c != cw:
        raise ShapeError(
            f"conv2d channel mismatch: input axis 1 is {c}, kernel axis 1 is {cw}")
    if stride < 1:
        raise ShapeError(f"conv2d stride must be >= 1, got {stride}")
    if h + 2 * padding < kh or wd + 2 * padding < kw:
        raise ShapeError(
            f"conv2d kernel ({kh}x{kw}) larger than padded input "
            f"({h + 2 * padding}x{wd + 2 * padding}) on spatial axes 2,3")
    if b is not None and b.shape != (k,):
        raise ShapeError(
            f"conv2d bias must have shape ({k},), got {b.shape}")

    col, oh, ow = _im2col(x.data, kh, kw, stride, padding)
    wf = w.data.reshape(k, c * kh * kw)
    out = wf @ col                                   # [N, K, oh*ow]
    if b is not None:
        out = out + b.data[:, None]
    out = out.reshape(n, k, oh, ow)

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gf = g.reshape(n, k, oh * ow)
        dw = np.einsum("nkl,nml->km", gf, col).reshape(w.shape)
        dcol = np.einsum("km,nkl->nml", wf, gf)
        dx = _col2im(dcol, x.shape, kh, kw, stride, padding)
        if b is None:
            return dx, dw
        return dx, dw, g.sum(axis=(0, 2, 3))

    return _make(out, "conv2d", parents, backward)


# ---------------------------------------------------------------------------
# short-time Fourier magnitude

def stft_magnitude(x: Tensor, window: np.ndarray, hop: int, nfft: int) -> Tensor:
    """Magnitude spectrogram of the last axis: [..., L] -> [..., frames, bins].

    Frames are ``(L - len(window)) // hop + 1`` hop-spaced windows (no edge
    padding); each is multiplied by ``window``, zero-padded to ``nfft`` and
    passed through a real FFT. The pull-back routes the magnitude gradient
    through Z/|Z|, applies the FFT adjoint via an inverse FFT, and
    overlap-adds frame gradients back onto the signal.
    """
    win = len(window)
    length = x.shape[-1]
    if win > length:
        raise ShapeError(
            f"stft window ({win}) longer than signal last axis ({length})")
    window = window.astype(x.dtype.type, copy=False)
    frames = np.lib.stride_tricks.sliding_window_view(
        x.data, win, axis=-1)[..., ::hop, :]
    fw = frames * window
    z = np.fft.rfft(fw, n=nfft, axis=-1)
    out = np.abs(z)

    def backward(g):
        safe = np.where(out > 0, out, 1)
        gz = (g / safe) * z                          # complex, dL/dZ conjugate pair
        pad_width = [(0, 0)] * (gz.ndim - 1) + [(0, nfft - gz.shape[-1])]
        full = np.pad(gz, pad_width)
        dfw = np.real(np.fft.ifft(full, axis=-1))[..., :win] * nfft
        dframes = (dfw * window).astype(x.dtype, copy=False)
        dx = np.zeros_like(x.data)
        n_frames = dframes.shape[-2]
        for f in range(n_frames):
            start = f * hop
            dx[..., start:start + win] += dframes[..., f, :]
        return (dx,)

    return _make(np.ascontiguousarray(out), "stft_magnitude", (x,), backward)
