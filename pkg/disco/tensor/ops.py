"""Differentiable operations on Tensors.

Every op checks its shapes up front, computes the forward result with numpy
and registers a closure that maps the output gradient to the gradients of
its inputs. There is no implicit broadcasting; ops that need a per-channel
operand (bias, batch-norm affine, channel masks) take it explicitly.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionError, ParameterError
from .core import Tensor

logger = logging.getLogger(__name__)

Axis = Union[None, int, Sequence[int]]


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _require_ndim(op: str, x: Tensor, ndim: int) -> None:
    if x.ndim != ndim:
        raise DimensionError(f"{op}: expected a rank-{ndim} tensor, got shape {x.shape}")


def _push(t: Tensor, grad: np.ndarray) -> None:
    if t.requires_grad:
        t.accumulate_grad(grad)


# --------------------------------------------------------------------------
# Elementwise arithmetic and shape manipulation

def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape('add', a, b)

    def _backward(g):
        _push(a, g)
        _push(b, g)
    return Tensor.from_op(a.data + b.data, (a, b), _backward, 'add')


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape('sub', a, b)

    def _backward(g):
        _push(a, g)
        _push(b, -g)
    return Tensor.from_op(a.data - b.data, (a, b), _backward, 'sub')


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape('mul', a, b)

    def _backward(g):
        _push(a, g * b.data)
        _push(b, g * a.data)
    return Tensor.from_op(a.data * b.data, (a, b), _backward, 'mul')


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a constant scalar."""
    def _backward(g):
        _push(a, g * factor)
    return Tensor.from_op(a.data * factor, (a,), _backward, 'scale')


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as exc:
        raise DimensionError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from exc

    def _backward(g):
        _push(x, g.reshape(x.shape))
    return Tensor.from_op(out, (x,), _backward, 'reshape')


def flatten(x: Tensor) -> Tensor:
    """Collapse every axis but the first."""
    return reshape(x, (x.shape[0], -1))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError(f"transpose: {axes} is not a permutation of {x.ndim} axes")
    inverse = tuple(np.argsort(axes))

    def _backward(g):
        _push(x, np.transpose(g, inverse))
    return Tensor.from_op(np.transpose(x.data, axes), (x,), _backward, 'transpose')


def _normalize_axes(x: Tensor, axis: Axis) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(x.ndim))
    if isinstance(axis, int):
        axis = (axis,)
    axes = tuple(a % x.ndim for a in axis)
    if len(set(axes)) != len(axes):
        raise DimensionError(f"repeated axis in {axis}")
    return axes


def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _normalize_axes(x, axis)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def _backward(g):
        expanded = g if keepdims else np.expand_dims(g, axes)
        _push(x, np.broadcast_to(expanded, x.shape).copy())
    return Tensor.from_op(out, (x,), _backward, 'sum')


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(x, axis)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    if count == 0:
        raise DimensionError(f"mean over an empty extent of shape {x.shape}")
    return scale(sum(x, axes, keepdims), 1.0 / count)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require_ndim('matmul', a, 2)
    _require_ndim('matmul', b, 2)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner extents differ, {a.shape} @ {b.shape}")

    def _backward(g):
        _push(a, g @ b.data.T)
        _push(b, a.data.T @ g)
    return Tensor.from_op(a.data @ b.data, (a, b), _backward, 'matmul')


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map of an N x D batch with a D x K weight and K bias."""
    _require_ndim('linear', x, 2)
    _require_ndim('linear', weight, 2)
    if x.shape[1] != weight.shape[0]:
        raise DimensionError(f"linear: input width {x.shape[1]} does not match weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise DimensionError(f"linear: bias shape {bias.shape} does not match weight {weight.shape}")
    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)

    def _backward(g):
        _push(x, g @ weight.data.T)
        _push(weight, x.data.T @ g)
        if bias is not None:
            _push(bias, g.sum(axis=0))
    return Tensor.from_op(out, parents, _backward, 'linear')


# --------------------------------------------------------------------------
# Activations and masking

def relu(x: Tensor) -> Tensor:
    active = x.data > 0

    def _backward(g):
        _push(x, g * active)
    return Tensor.from_op(np.where(active, x.data, 0).astype(x.data.dtype), (x,), _backward, 'relu')


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_temperature(s: Tensor, temperature: float) -> Tensor:
    """Elementwise 1 / (1 + exp(-s / T)); small T sharpens toward a step.

    Results stay inside the open interval (0, 1) at the tensor's precision:
    values that would round to 0 or 1 are held one ulp away from them.
    """
    if not temperature > 0:
        raise ParameterError(f"Sigmoid temperature must be positive, got {temperature}")
    out = _stable_sigmoid(s.data.astype(np.float64) / temperature)
    dtype = s.data.dtype
    low, high = np.nextafter(dtype.type(0), dtype.type(1)), np.nextafter(dtype.type(1), dtype.type(0))
    values = np.clip(out.astype(dtype), low, high)

    def _backward(g):
        _push(s, g * out * (1.0 - out) / temperature)
    return Tensor.from_op(values, (s,), _backward, 'sigmoid_temperature')


def sigmoid(x: Tensor) -> Tensor:
    return sigmoid_temperature(x, 1.0)


def mask_channels(x: Tensor, mask: Tensor) -> Tensor:
    """Scale channel c of sample n by mask[n, c]."""
    if x.ndim < 2 or mask.shape != x.shape[:2]:
        raise DimensionError(f"mask_channels: mask {mask.shape} does not match activations {x.shape}")
    tail = (1,) * (x.ndim - 2)
    m = mask.data.reshape(mask.shape + tail)
    spatial = tuple(range(2, x.ndim))

    def _backward(g):
        _push(x, g * m)
        _push(mask, (g * x.data).sum(axis=spatial) if spatial else g * x.data)
    return Tensor.from_op(x.data * m, (x, mask), _backward, 'mask_channels')


# --------------------------------------------------------------------------
# Convolutions

def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def transpose_conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size - 1) * stride - 2 * padding + kernel


def _check_geometry(op: str, stride: int, padding: int) -> None:
    if stride < 1:
        raise ParameterError(f"{op}: stride must be >= 1, got {stride}")
    if padding < 0:
        raise ParameterError(f"{op}: padding must be >= 0, got {padding}")


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of an NCHW batch with an OIKK weight."""
    _check_geometry('conv2d', stride, padding)
    _require_ndim('conv2d', x, 4)
    _require_ndim('conv2d', weight, 4)
    n, c, h, w = x.shape
    o, i, kh, kw = weight.shape
    if i != c:
        raise DimensionError(f"conv2d: weight expects {i} input channels, input has {c}")
    if bias is not None and bias.shape != (o,):
        raise DimensionError(f"conv2d: bias shape {bias.shape} does not match {o} filters")
    ho = conv_output_size(h, kh, stride, padding)
    wo = conv_output_size(w, kw, stride, padding)
    if ho < 1 or wo < 1:
        raise DimensionError(f"conv2d: kernel {kh}x{kw} does not fit a padded {h}x{w} input")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    out = np.zeros((n, ho, wo, o), dtype=x.data.dtype)
    for di in range(kh):
        for dj in range(kw):
            patch = xp[:, :, di:di + stride * (ho - 1) + 1:stride, dj:dj + stride * (wo - 1) + 1:stride]
            out += np.tensordot(patch, weight.data[:, :, di, dj], axes=([1], [1]))
    out = out.transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data.reshape(1, o, 1, 1)
    parents = (x, weight) if bias is None else (x, weight, bias)

    def _backward(g):
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for di in range(kh):
                for dj in range(kw):
                    contrib = np.tensordot(g, weight.data[:, :, di, dj], axes=([1], [0]))
                    gxp[:, :, di:di + stride * (ho - 1) + 1:stride,
                        dj:dj + stride * (wo - 1) + 1:stride] += contrib.transpose(0, 3, 1, 2)
            x.accumulate_grad(gxp[:, :, padding:padding + h, padding:padding + w])
        if weight.requires_grad:
            gw = np.zeros_like(weight.data)
            for di in range(kh):
                for dj in range(kw):
                    patch = xp[:, :, di:di + stride * (ho - 1) + 1:stride, dj:dj + stride * (wo - 1) + 1:stride]
                    gw[:, :, di, dj] = np.tensordot(g, patch, axes=([0, 2, 3], [0, 2, 3]))
            weight.accumulate_grad(gw)
        if bias is not None:
            _push(bias, g.sum(axis=(0, 2, 3)))
    return Tensor.from_op(np.ascontiguousarray(out), parents, _backward, 'conv2d')


def transpose_conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
                     stride: int = 1, padding: int = 0) -> Tensor:
    """Adjoint of conv2d: weight is laid out (in, out, K, K).

    Passing the weight of a conv2d maps its output space back onto its input
    space, so <conv2d(x, w), y> == <x, transpose_conv2d(y, w)>.
    """
    _check_geometry('transpose_conv2d', stride, padding)
    _require_ndim('transpose_conv2d', x, 4)
    _require_ndim('transpose_conv2d', weight, 4)
    n, c, h, w = x.shape
    i, o, kh, kw = weight.shape
    if i != c:
        raise DimensionError(f"transpose_conv2d: weight expects {i} input channels, input has {c}")
    if bias is not None and bias.shape != (o,):
        raise DimensionError(f"transpose_conv2d: bias shape {bias.shape} does not match {o} outputs")
    ho = transpose_conv_output_size(h, kh, stride, padding)
    wo = transpose_conv_output_size(w, kw, stride, padding)
    if ho < 1 or wo < 1:
        raise DimensionError(f"transpose_conv2d: padding {padding} crops away the whole output")
    hf = (h - 1) * stride + kh
    wf = (w - 1) * stride + kw
    full = np.zeros((n, o, hf, wf), dtype=x.data.dtype)
    for di in range(kh):
        for dj in range(kw):
            contrib = np.tensordot(x.data, weight.data[:, :, di, dj], axes=([1], [0]))
            full[:, :, di:di + stride * (h - 1) + 1:stride, dj:dj + stride * (w - 1) + 1:stride] += \
                contrib.transpose(0, 3, 1, 2)
    out = full[:, :, padding:padding + ho, padding:padding + wo]
    if bias is not None:
        out = out + bias.data.reshape(1, o, 1, 1)
    parents = (x, weight) if bias is None else (x, weight, bias)

    def _backward(g):
        gf = np.zeros((n, o, hf, wf), dtype=g.dtype)
        gf[:, :, padding:padding + ho, padding:padding + wo] = g
        if x.requires_grad:
            gx = np.zeros(x.shape, dtype=x.data.dtype)
            for di in range(kh):
                for dj in range(kw):
                    patch = gf[:, :, di:di + stride * (h - 1) + 1:stride, dj:dj + stride * (w - 1) + 1:stride]
                    gx += np.tensordot(patch, weight.data[:, :, di, dj], axes=([1], [1])).transpose(0, 3, 1, 2)
            x.accumulate_grad(gx)
        if weight.requires_grad:
            gw = np.zeros_like(weight.data)
            for di in range(kh):
                for dj in range(kw):
                    patch = gf[:, :, di:di + stride * (h - 1) + 1:stride, dj:dj + stride * (w - 1) + 1:stride]
                    gw[:, :, di, dj] = np.tensordot(x.data, patch, axes=([0, 2, 3], [0, 2, 3]))
            weight.accumulate_grad(gw)
        if bias is not None:
            _push(bias, g.sum(axis=(0, 2, 3)))
    return Tensor.from_op(np.ascontiguousarray(out), parents, _backward, 'transpose_conv2d')


# --------------------------------------------------------------------------
# Normalisation, resampling, pooling

def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor,
               running_mean: np.ndarray, running_var: np.ndarray,
               train_mode: bool, momentum: float = 0.1, eps: float = 1e-5,
               update_running: bool = True) -> Tensor:
    """Per-channel normalisation of an NC or NCHW batch.

    In train mode the batch statistics are used and, with ``update_running``,
    folded into the running buffers in place (unbiased variance). In eval mode
    the running buffers are used and nothing is updated.
    """
    if x.ndim not in (2, 4):
        raise DimensionError(f"batch_norm: expected NC or NCHW input, got shape {x.shape}")
    c = x.shape[1]
    for name, arr in (('gamma', gamma.data), ('beta', beta.data), ('running_mean', running_mean),
                      ('running_var', running_var)):
        if arr.shape != (c,):
            raise DimensionError(f"batch_norm: {name} shape {arr.shape} does not match {c} channels")
    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    bshape = (1, c) if x.ndim == 2 else (1, c, 1, 1)
    count = x.size // c

    if train_mode:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if update_running:
            unbiased = var * count / (count - 1) if count > 1 else var
            running_mean *= (1.0 - momentum)
            running_mean += momentum * mu
            running_var *= (1.0 - momentum)
            running_var += momentum * unbiased
    else:
        mu = running_mean.copy()
        var = running_var.copy()
    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.data.dtype)
    xhat = (x.data - mu.reshape(bshape)) * inv_std.reshape(bshape)
    out = xhat * gamma.data.reshape(bshape) + beta.data.reshape(bshape)

    def _backward(g):
        _push(gamma, (g * xhat).sum(axis=axes))
        _push(beta, g.sum(axis=axes))
        if not x.requires_grad:
            return
        dxhat = g * gamma.data.reshape(bshape)
        if train_mode:
            dx = (inv_std.reshape(bshape) / count) * (
                count * dxhat
                - dxhat.sum(axis=axes).reshape(bshape)
                - xhat * (dxhat * xhat).sum(axis=axes).reshape(bshape))
        else:
            dx = dxhat * inv_std.reshape(bshape)
        x.accumulate_grad(dx)
    return Tensor.from_op(out, (x, gamma, beta), _backward, 'batch_norm')


def interpolation_matrix(src: int, dst: int) -> np.ndarray:
    """Corner-aligned linear interpolation weights of shape (dst, src)."""
    weights = np.zeros((dst, src), dtype=np.float64)
    for i in range(dst):
        pos = i * (src - 1) / (dst - 1) if dst > 1 else 0.0
        lo = int(np.floor(pos))
        hi = min(lo + 1, src - 1)
        frac = pos - lo
        weights[i, lo] += 1.0 - frac
        weights[i, hi] += frac
    return weights


def bilinear_resize(x: Tensor, height: int, width: int) -> Tensor:
    """Resize the spatial axes of an NCHW batch to ``height`` x ``width``."""
    _require_ndim('bilinear_resize', x, 4)
    if height < 1 or width < 1:
        raise DimensionError(f"bilinear_resize: target {height}x{width} is empty")
    ry = interpolation_matrix(x.shape[2], height).astype(x.data.dtype)
    rx = interpolation_matrix(x.shape[3], width).astype(x.data.dtype)
    rows = np.tensordot(x.data, ry, axes=([2], [1]))        # N, C, W, H'
    out = np.tensordot(rows, rx, axes=([2], [1]))           # N, C, H', W'

    def _backward(g):
        back = np.tensordot(g, ry, axes=([2], [0]))          # N, C, W', H
        _push(x, np.tensordot(back, rx, axes=([2], [0])))    # N, C, H, W
    return Tensor.from_op(out, (x,), _backward, 'bilinear_resize')


def global_avg_pool(x: Tensor) -> Tensor:
    """Average each channel over its spatial extent: NCHW -> NC."""
    _require_ndim('global_avg_pool', x, 4)
    return mean(x, axis=(2, 3))


# --------------------------------------------------------------------------
# Losses; accumulated in 64-bit

def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64) - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of N x K logits against integer labels."""
    _require_ndim('softmax_cross_entropy', logits, 2)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"softmax_cross_entropy: labels of shape {labels.shape} for {n} rows")
    if n == 0:
        raise DimensionError("softmax_cross_entropy: empty batch")
    if labels.min() < 0 or labels.max() >= k:
        raise ParameterError(f"softmax_cross_entropy: labels must lie in [0, {k})")
    z = logits.data.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(n), labels]))

    def _backward(g):
        probs = softmax(logits.data)
        probs[np.arange(n), labels] -= 1.0
        _push(logits, (probs * (float(g) / n)).astype(logits.data.dtype))
    return Tensor.from_op(np.array(loss, dtype=np.float64), (logits,), _backward, 'softmax_cross_entropy')


def l1_loss(a: Tensor, b: Tensor) -> Tensor:
    """Mean absolute difference."""
    _require_same_shape('l1_loss', a, b)
    if a.size == 0:
        raise DimensionError("l1_loss: empty tensors")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    loss = np.abs(diff).mean()

    def _backward(g):
        grad = np.sign(diff) * (float(g) / a.size)
        _push(a, grad.astype(a.data.dtype))
        _push(b, (-grad).astype(b.data.dtype))
    return Tensor.from_op(np.array(loss, dtype=np.float64), (a, b), _backward, 'l1_loss')


def l2_loss(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared difference."""
    _require_same_shape('l2_loss', a, b)
    if a.size == 0:
        raise DimensionError("l2_loss: empty tensors")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    loss = (diff * diff).mean()

    def _backward(g):
        grad = diff * (2.0 * float(g) / a.size)
        _push(a, grad.astype(a.data.dtype))
        _push(b, (-grad).astype(b.data.dtype))
    return Tensor.from_op(np.array(loss, dtype=np.float64), (a, b), _backward, 'l2_loss')
