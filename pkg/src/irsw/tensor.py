"""N-dimensional float64 tensors with tape-based reverse-mode autodiff.

Deliberately minimal: only the operators needed by the attention/denoising
networks are provided (elementwise arithmetic, batched matmul, shape moves,
same-padded stride-1 convolution, batch normalization, ReLU/PReLU/softmax
and scalar reductions). Everything runs in 64-bit and is deterministic for
fixed inputs.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_GRAD_ENABLED = True


class no_grad:
    """Context manager that disables tape recording inside the block."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    """A real-valued array plus an optional gradient buffer and tape node.

    ``data`` is always float64 and row-major. ``grad`` is lazily allocated
    with the same shape. Tensors built by operators keep references to their
    parents so ``backward()`` can replay the tape; tensors created while
    gradients are disabled (or from inputs that do not require gradients)
    carry no tape state.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.size == 0:
            raise ValueError(f"tensor dims must all be positive, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None
        self._op = "leaf"

    # -- basic introspection -------------------------------------------------

    @property
    def dims(self):
        return list(self.data.shape)

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, op={self._op}{tag})"

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    # -- autodiff -------------------------------------------------------------

    def backward(self):
        """Reverse-mode sweep from a scalar loss."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss tensor")
        order = _topo_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self):
        return tsum(self)

    def mean(self):
        return tmean(self)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes if len(axes) > 1 else axes[0])


def _topo_order(root):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    return order


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _result(data, parents, op, backward):
    track = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    out = Tensor.__new__(Tensor)
    out.data = np.asarray(data, dtype=np.float64)
    out.requires_grad = track
    out.grad = None
    out.name = None
    out._op = op
    if track:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def _check_same_shape(a, b, op):
    if a.data.shape != b.data.shape:
        raise ValueError(f"{op}: shape mismatch {a.data.shape} vs {b.data.shape}")


# -- elementwise arithmetic ----------------------------------------------------


def add(a, b):
    _check_same_shape(a, b, "add")

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, g)

    return _result(a.data + b.data, (a, b), "add", backward)


def sub(a, b):
    _check_same_shape(a, b, "sub")

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    return _result(a.data - b.data, (a, b), "sub", backward)


def neg(a):
    def backward(g):
        _accumulate(a, -g)

    return _result(-a.data, (a,), "neg", backward)


def mul(a, b):
    _check_same_shape(a, b, "mul")

    def backward(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _result(a.data * b.data, (a, b), "mul", backward)


def scale(a, s):
    s = float(s)

    def backward(g):
        _accumulate(a, g * s)

    return _result(a.data * s, (a,), "scale", backward)


# -- shape moves and matmul ----------------------------------------------------


def reshape(a, shape):
    new = a.data.reshape(shape)
    old_shape = a.data.shape

    def backward(g):
        _accumulate(a, g.reshape(old_shape))

    return _result(new, (a,), "reshape", backward)


def transpose(a, axes):
    axes = tuple(axes)
    inverse = tuple(int(i) for i in np.argsort(axes))

    def backward(g):
        _accumulate(a, np.transpose(g, inverse))

    return _result(np.ascontiguousarray(np.transpose(a.data, axes)), (a,), "transpose", backward)


def matmul(a, b):
    """Batched matrix product over the trailing two axes; leading dims equal."""
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError("matmul requires tensors with at least 2 dims")
    if a.data.shape[:-2] != b.data.shape[:-2]:
        raise ValueError(f"matmul: leading dims differ {a.data.shape} vs {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ValueError(f"matmul: inner dims differ {a.data.shape} vs {b.data.shape}")

    def backward(g):
        _accumulate(a, g @ np.swapaxes(b.data, -1, -2))
        _accumulate(b, np.swapaxes(a.data, -1, -2) @ g)

    return _result(a.data @ b.data, (a, b), "matmul", backward)


# -- reductions ----------------------------------------------------------------


def tsum(a):
    def backward(g):
        _accumulate(a, np.full_like(a.data, float(g)))

    return _result(a.data.sum(), (a,), "sum", backward)


def tmean(a):
    n = a.data.size

    def backward(g):
        _accumulate(a, np.full_like(a.data, float(g) / n))

    return _result(a.data.mean(), (a,), "mean", backward)


# -- activations ---------------------------------------------------------------


def relu(a):
    mask = a.data > 0.0

    def backward(g):
        _accumulate(a, g * mask)

    return _result(np.where(mask, a.data, 0.0), (a,), "relu", backward)


def prelu(a, slope):
    """PReLU with a single learnable scalar slope for negative inputs."""
    if slope.data.size != 1:
        raise ValueError("prelu slope must be a scalar tensor")
    neg_mask = a.data < 0.0
    s = float(slope.data.reshape(-1)[0])

    def backward(g):
        _accumulate(a, g * np.where(neg_mask, s, 1.0))
        _accumulate(slope, np.array((g * np.where(neg_mask, a.data, 0.0)).sum()).reshape(slope.data.shape))

    return _result(np.where(neg_mask, s * a.data, a.data), (a, slope), "prelu", backward)


def softmax(a, axis):
    ax = int(axis)
    if not -a.data.ndim <= ax < a.data.ndim:
        raise ValueError(f"softmax axis {axis} invalid for shape {a.data.shape}")
    shifted = a.data - a.data.max(axis=ax, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=ax, keepdims=True)

    def backward(g):
        inner = (g * out).sum(axis=ax, keepdims=True)
        _accumulate(a, out * (g - inner))

    return _result(out, (a,), "softmax", backward)


# -- convolution ---------------------------------------------------------------


def _im2col(xd_nhwc, s):
    """(N, Hp, Wp, C) padded channels-last input -> (N*H*W, S*S*C) patches."""
    n, hp, wp, c = xd_nhwc.shape
    h, w = hp - s + 1, wp - s + 1
    cols = np.empty((n, h, w, s, s, c))
    for i in range(s):
        for j in range(s):
            cols[:, :, :, i, j, :] = xd_nhwc[:, i : i + h, j : j + w, :]
    return cols.reshape(n * h * w, s * s * c)


def conv2d(x, kernels, bias):
    """Stride-1 convolution with zero 'same' padding; kernels must be odd-sized.

    Accepts (C_in, H, W) or batched (N, C_in, H, W) inputs; output keeps the
    spatial dims. Differentiable w.r.t. input, kernels and bias.
    """
    w = kernels.data
    if w.ndim != 4 or w.shape[2] != w.shape[3]:
        raise ValueError(f"kernels must have shape (C_out, C_in, S, S), got {w.shape}")
    s = w.shape[2]
    if s % 2 != 1:
        raise ValueError(f"kernel size must be odd, got {s}")
    squeeze = x.data.ndim == 3
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 4:
        raise ValueError(f"conv2d input must be 3- or 4-dimensional, got {x.data.shape}")
    if xd.shape[1] != w.shape[1]:
        raise ValueError(f"conv2d: input has {xd.shape[1]} channels but kernels expect {w.shape[1]}")
    if bias.data.shape != (w.shape[0],):
        raise ValueError(f"bias must have shape ({w.shape[0]},), got {bias.data.shape}")

    n, c_in, h, wd = xd.shape
    c_out = w.shape[0]
    pad = (s - 1) // 2
    xp = np.pad(np.moveaxis(xd, 1, 3), ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = _im2col(xp, s)                                   # (N*H*W, S*S*C_in)
    wmat = np.ascontiguousarray(w.transpose(2, 3, 1, 0)).reshape(s * s * c_in, c_out)
    out = (cols @ wmat + bias.data[None, :]).reshape(n, h, wd, c_out)
    out = np.moveaxis(out, 3, 1)
    if squeeze:
        out = out[0]

    def backward(g):
        gb = g[None] if squeeze else g
        gflat = np.ascontiguousarray(np.moveaxis(gb, 1, 3)).reshape(n * h * wd, c_out)
        _accumulate(bias, gflat.sum(axis=0))
        gw = (cols.T @ gflat).reshape(s, s, c_in, c_out)
        _accumulate(kernels, np.ascontiguousarray(gw.transpose(3, 2, 0, 1)))
        if x.requires_grad:
            gcols = (gflat @ wmat.T).reshape(n, h, wd, s, s, c_in)
            gxp = np.zeros_like(xp)
            for i in range(s):
                for j in range(s):
                    gxp[:, i : i + h, j : j + wd, :] += gcols[:, :, :, i, j, :]
            gx = np.moveaxis(gxp[:, pad : pad + h, pad : pad + wd, :], 3, 1)
            _accumulate(x, gx[0] if squeeze else gx)

    return _result(out, (x, kernels, bias), "conv2d", backward)


# -- batch normalization ---------------------------------------------------


class RunningStats:
    """Per-channel running mean/variance for batchnorm eval mode."""

    def __init__(self, channels):
        self.mean = np.zeros(channels, dtype=np.float64)
        self.var = np.ones(channels, dtype=np.float64)

    def update(self, batch_mean, batch_var, momentum):
        self.mean = (1.0 - momentum) * self.mean + momentum * batch_mean
        self.var = (1.0 - momentum) * self.var + momentum * batch_var


def batchnorm2d(x, gamma, beta, stats, training, momentum=0.1, eps=1e-5):
    """Channel-wise batch normalization over (N, H, W) with affine transform.

    Train mode normalizes with batch statistics (biased variance, epsilon in
    the denominator so zero-variance channels stay finite) and updates
    ``stats`` with the given momentum. Eval mode normalizes with the running
    statistics.
    """
    xd = x.data
    if xd.ndim != 4:
        raise ValueError(f"batchnorm input must be (N, C, H, W), got {xd.shape}")
    c = xd.shape[1]
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ValueError("gamma/beta must be per-channel vectors")
    axes = (0, 2, 3)
    count = xd.shape[0] * xd.shape[2] * xd.shape[3]

    if training:
        if count < 2:
            raise ValueError("batchnorm train mode needs at least 2 values per channel")
        mean = xd.mean(axis=axes)
        var = xd.var(axis=axes)
        stats.update(mean, var, momentum)
    else:
        mean = stats.mean
        var = stats.var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mean[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma.data[None, :, None, None] * xhat + beta.data[None, :, None, None]

    def backward(g):
        _accumulate(gamma, (g * xhat).sum(axis=axes))
        _accumulate(beta, g.sum(axis=axes))
        if x.requires_grad:
            gs = g * gamma.data[None, :, None, None]
            if training:
                m1 = gs.mean(axis=axes)[None, :, None, None]
                m2 = (gs * xhat).mean(axis=axes)[None, :, None, None]
                gx = inv_std[None, :, None, None] * (gs - m1 - xhat * m2)
            else:
                gx = gs * inv_std[None, :, None, None]
            _accumulate(x, gx)

    return _result(out, (x, gamma, beta), "batchnorm", backward)


# -- helpers -------------------------------------------------------------------


def parameter(data, name=None):
    return Tensor(data, requires_grad=True, name=name)


def find_nonfinite(root):
    """Return the op name of the first tape node holding non-finite values."""
    for node in _topo_order(root):
        if not np.isfinite(node.data).all():
            return node._op
    return None
