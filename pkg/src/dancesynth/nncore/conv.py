"""Convolution primitives (cross-correlation, PyTorch layout conventions)."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError
from .tensor import Tensor, as_tensor


def _pair(v):
    return (v, v) if np.isscalar(v) else tuple(v)


def _windows(xp, kh, kw, sh, sw, ho, wo):
    # (B, C, ho, wo, kh, kw) strided view, no copy
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return win[:, :, : sh * (ho - 1) + 1: sh, : sw * (wo - 1) + 1: sw]


def _scatter(cols, out_shape, sh, sw):
    # adjoint of _windows: cols (C, kh, kw, B, h, w) summed into a (B, C, H, W) map
    out = np.zeros((out_shape[1], out_shape[0]) + tuple(out_shape[2:]))
    _, kh, kw, _, h, w = cols.shape
    for i in range(kh):
        for j in range(kw):
            out[:, :, i: i + sh * (h - 1) + 1: sh, j: j + sw * (w - 1) + 1: sw] += cols[:, i, j]
    return out.transpose(1, 0, 2, 3)


def conv2d(x, weight, bias=None, stride=1, pad=0):
    """2-D cross-correlation.

    ``x`` is ``(B, C, H, W)`` or ``(C, H, W)``; ``weight`` is ``(O, C, kh, kw)``.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    batched = x.ndim == 4
    if not batched:
        x = _add_batch(x)
    sh, sw = _pair(stride)
    ph, pw = _pair(pad)
    if sh < 1 or sw < 1:
        raise DimensionError("stride must be >= 1")
    B, C, H, W = x.shape
    O, Cw, kh, kw = weight.shape
    if Cw != C:
        raise DimensionError(f"input has {C} channels, weight expects {Cw}", axis=1)
    if kh > H + 2 * ph:
        raise DimensionError(f"kernel height {kh} exceeds padded input {H + 2 * ph}", axis=2)
    if kw > W + 2 * pw:
        raise DimensionError(f"kernel width {kw} exceeds padded input {W + 2 * pw}", axis=3)
    ho = (H + 2 * ph - kh) // sh + 1
    wo = (W + 2 * pw - kw) // sw + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = _windows(xp, kh, kw, sh, sw, ho, wo)
    out = np.tensordot(win, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    parents = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (O,):
            raise DimensionError(f"bias shape {bias.shape} vs {O} output channels", axis=0)
        out = out + bias.data[:, None, None]
        parents = parents + (bias,)

    def backward(g):
        gw = np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))
        gx = None
        if x.requires_grad:
            cols = np.tensordot(weight.data, g, axes=([0], [1]))
            gxp = _scatter(cols, xp.shape, sh, sw)
            gx = gxp[:, :, ph: ph + H, pw: pw + W]
        grads = (gx, gw)
        if bias is not None:
            grads = grads + (g.sum(axis=(0, 2, 3)),)
        return grads

    out = Tensor._from_op(np.ascontiguousarray(out), parents, backward)
    return out if batched else _drop_batch(out)


def conv2d_transpose(x, weight, bias=None, stride=1, pad=0, output_padding=0):
    """Gradient of :func:`conv2d` with respect to its input, as a layer.

    ``weight`` is ``(C_in, C_out, kh, kw)``. Output size per axis is
    ``(n - 1) * stride - 2 * pad + k + output_padding``.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    batched = x.ndim == 4
    if not batched:
        x = _add_batch(x)
    sh, sw = _pair(stride)
    ph, pw = _pair(pad)
    oph, opw = _pair(output_padding)
    B, C, H, W = x.shape
    Cw, O, kh, kw = weight.shape
    if Cw != C:
        raise DimensionError(f"input has {C} channels, weight expects {Cw}", axis=1)
    full_h = (H - 1) * sh + kh + oph
    full_w = (W - 1) * sw + kw + opw
    ho, wo = full_h - 2 * ph, full_w - 2 * pw
    if ho <= 0 or wo <= 0:
        raise DimensionError("padding removes the whole output", axis=2)
    cols = np.tensordot(weight.data, x.data, axes=([0], [1]))
    full = _scatter(cols, (B, O, full_h, full_w), sh, sw)
    out = full[:, :, ph: ph + ho, pw: pw + wo]
    parents = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (O,):
            raise DimensionError(f"bias shape {bias.shape} vs {O} output channels", axis=0)
        out = out + bias.data[:, None, None]
        parents = parents + (bias,)

    def backward(g):
        gfull = np.zeros((B, O, full_h, full_w))
        gfull[:, :, ph: ph + ho, pw: pw + wo] = g
        win = _windows(gfull, kh, kw, sh, sw, H, W)
        gx = np.tensordot(win, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        gw = np.tensordot(x.data, win, axes=([0, 2, 3], [0, 2, 3]))
        grads = (gx, gw)
        if bias is not None:
            grads = grads + (g.sum(axis=(0, 2, 3)),)
        return grads

    out = Tensor._from_op(np.ascontiguousarray(out), parents, backward)
    return out if batched else _drop_batch(out)


def conv1d(x, weight, bias=None, stride=1, pad=0):
    """1-D cross-correlation over the last axis.

    ``x`` is ``(B, C, T)`` or ``(C, T)``; ``weight`` is ``(O, C, K)``.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim not in (2, 3):
        raise DimensionError(f"conv1d expects (C, T) or (B, C, T), got {x.shape}")
    if weight.ndim != 3:
        raise DimensionError(f"conv1d weight must be (O, C, K), got {weight.shape}")
    if x.shape[-2] != weight.shape[1]:
        raise DimensionError(f"input has {x.shape[-2]} channels, weight expects {weight.shape[1]}",
                             axis=x.ndim - 2)
    if weight.shape[2] > x.shape[-1] + 2 * pad:
        raise DimensionError(f"kernel {weight.shape[2]} exceeds padded length {x.shape[-1] + 2 * pad}",
                             axis=x.ndim - 1)
    x4 = _insert_height(x)
    w4 = _insert_height(weight)
    out = conv2d(x4, w4, bias, stride=(1, stride), pad=(0, pad))
    return _remove_height(out)


def conv1d_transpose(x, weight, bias=None, stride=1, pad=0, output_padding=0):
    """Transpose of :func:`conv1d`; ``weight`` is ``(C_in, C_out, K)``."""
    x, weight = as_tensor(x), as_tensor(weight)
    out = conv2d_transpose(_insert_height(x), _insert_height(weight), bias,
                           stride=(1, stride), pad=(0, pad), output_padding=(0, output_padding))
    return _remove_height(out)


def conv_output_length(n, kernel, stride=1, pad=0):
    return (n + 2 * pad - kernel) // stride + 1


def _add_batch(t):
    return t.reshape((1,) + t.shape)


def _drop_batch(t):
    return t.reshape(t.shape[1:])


def _insert_height(t):
    s = t.shape
    return t.reshape(s[:-1] + (1, s[-1]))


def _remove_height(t):
    s = t.shape
    return t.reshape(s[:-2] + (s[-1],))
