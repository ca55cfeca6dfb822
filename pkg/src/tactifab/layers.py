"""Neural-network layer primitives with exact reverse-mode gradients.

Activations and gradients are float64 arrays; batches are (B, C, H, W).
The convolution kernels dominate training runtime and come in two
backends (see ``tactifab._accel``):

* numba: @njit loops, vectorized along the contiguous output row, with
  threads split over independent outputs only, so results do not depend
  on the thread count; the input gradient is a direct scatter at true
  flop count.
* numpy: im2col into one big GEMM, with the column matrix cached so the
  weight gradient is a second GEMM; the input gradient is a stride-1
  valid convolution of the zero-dilated, zero-padded output gradient
  with the spatially flipped, channel-swapped weights.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA

if USE_NUMBA:
    from numba import njit, prange

    # The stride-1 inner loops are written separately from the general
    # case: a literal unit stride is what lets LLVM vectorize them, and
    # stride 1 carries nearly all of the training flops.

    @njit(cache=True, parallel=True, fastmath=True)
    def _conv_valid_kernel(xp, w, b, stride, out):
        B, Ci, _, _ = xp.shape
        Co, _, KH, KW = w.shape
        OH = out.shape[2]
        OW = out.shape[3]
        for n in prange(B):
            acc = np.empty((Co, OW))
            for oh in range(OH):
                for co in range(Co):
                    for ow in range(OW):
                        acc[co, ow] = b[co]
                ih0 = oh * stride
                for ci in range(Ci):
                    for i in range(KH):
                        xr = xp[n, ci, ih0 + i]
                        for co in range(Co):
                            for j in range(KW):
                                wv = w[co, ci, i, j]
                                if stride == 1:
                                    for ow in range(OW):
                                        acc[co, ow] += wv * xr[ow + j]
                                else:
                                    for ow in range(OW):
                                        acc[co, ow] += wv * xr[ow * stride + j]
                for co in range(Co):
                    for ow in range(OW):
                        out[n, co, oh, ow] = acc[co, ow]

    @njit(cache=True, parallel=True, fastmath=True)
    def _conv_dw_kernel(xp, dout, stride, dw):
        B = xp.shape[0]
        Ci = xp.shape[1]
        Co, OH, OW = dout.shape[1], dout.shape[2], dout.shape[3]
        KH = dw.shape[2]
        KW = dw.shape[3]
        for co in prange(Co):
            for ci in range(Ci):
                for i in range(KH):
                    for j in range(KW):
                        acc = 0.0
                        for n in range(B):
                            for oh in range(OH):
                                drow = dout[n, co, oh]
                                xrow = xp[n, ci, oh * stride + i]
                                if stride == 1:
                                    for ow in range(OW):
                                        acc += drow[ow] * xrow[ow + j]
                                else:
                                    for ow in range(OW):
                                        acc += drow[ow] * xrow[ow * stride + j]
                        dw[co, ci, i, j] = acc

    @njit(cache=True, parallel=True, fastmath=True)
    def _conv_dx_kernel(dout, w, stride, dxp):
        B = dout.shape[0]
        Co, OH, OW = dout.shape[1], dout.shape[2], dout.shape[3]
        Ci = w.shape[1]
        KH = w.shape[2]
        KW = w.shape[3]
        # Scatter form at true flop count; threads split over (n, ci) so
        # every dxp element has a single writer.
        for nc in prange(B * Ci):
            n = nc // Ci
            ci = nc % Ci
            for co in range(Co):
                for oh in range(OH):
                    drow = dout[n, co, oh]
                    for i in range(KH):
                        xrow = dxp[n, ci, oh * stride + i]
                        for j in range(KW):
                            wv = w[co, ci, i, j]
                            if stride == 1:
                                for ow in range(OW):
                                    xrow[ow + j] += wv * drow[ow]
                            else:
                                for ow in range(OW):
                                    xrow[ow * stride + j] += wv * drow[ow]


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(B*OH*OW, Ci*KH*KW) patch matrix of an already-padded input."""
    b, ci, hp, wp = xp.shape
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    sb, sc, sh, sw = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, oh, ow, ci, kh, kw),
        strides=(sb, sh * stride, sw * stride, sc, sh, sw),
    )
    return view.reshape(b * oh * ow, ci * kh * kw)


def _conv_valid(xp: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    """Valid convolution of a padded input. Returns (out, cols-or-None)."""
    batch, _, hp, wp = xp.shape
    co, _, kh, kw = w.shape
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    if USE_NUMBA:
        out = np.empty((batch, co, oh, ow))
        _conv_valid_kernel(xp, w, b, stride, out)
        return out, None
    cols = _im2col(xp, kh, kw, stride)
    out = cols @ w.reshape(co, -1).T + b
    return out.reshape(batch, oh, ow, co).transpose(0, 3, 1, 2), cols


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   stride: int = 1, pad: int = 0):
    """2D convolution (cross-correlation) with zero padding.

    x: (B, Ci, H, W); w: (Co, Ci, KH, KW); b: (Co,).
    Returns (out, cache) with out (B, Co, OH, OW).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if pad:
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    else:
        xp = x
    out, cols = _conv_valid(xp, w, b, stride)
    cache = (xp, cols, w, stride, pad, x.shape)
    return out, cache


def conv2d_backward(dout: np.ndarray, cache, need_dx: bool = True):
    """Gradients of conv2d_forward. Returns (dx, dw, db); dx is None when
    the caller declares it unused (e.g. the first layer)."""
    xp, cols, w, stride, pad, x_shape = cache
    dout = np.ascontiguousarray(dout, dtype=np.float64)
    batch, co, oh, ow = dout.shape
    kh, kw = w.shape[2], w.shape[3]

    db = dout.sum(axis=(0, 2, 3))

    if USE_NUMBA:
        dw = np.empty_like(w)
        _conv_dw_kernel(xp, dout, stride, dw)
    else:
        dflat = dout.transpose(0, 2, 3, 1).reshape(-1, co)
        dw = (dflat.T @ cols).reshape(w.shape)

    if not need_dx:
        return None, dw, db

    h, w_in = x_shape[2], x_shape[3]
    if USE_NUMBA:
        dxp = np.zeros_like(xp)
        _conv_dx_kernel(dout, w, stride, dxp)
    else:
        # dx as a stride-1 valid conv: dilate dout by the stride, pad by
        # the kernel minus one, convolve with flipped weights swapped to
        # (Ci, Co).
        if stride > 1:
            dilated = np.zeros((batch, co, (oh - 1) * stride + 1,
                                (ow - 1) * stride + 1))
            dilated[:, :, ::stride, ::stride] = dout
        else:
            dilated = dout
        ddp = np.pad(dilated, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        wf = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        dxp_core, _ = _conv_valid(ddp, wf, np.zeros(wf.shape[0]), 1)
        # Rows/cols the forward never reached (when the stride does not
        # divide the padded extent) get zero gradient.
        rem_h = xp.shape[2] - dxp_core.shape[2]
        rem_w = xp.shape[3] - dxp_core.shape[3]
        if rem_h or rem_w:
            dxp = np.pad(dxp_core, ((0, 0), (0, 0), (0, rem_h), (0, rem_w)))
        else:
            dxp = dxp_core
    dx = dxp[:, :, pad : pad + h, pad : pad + w_in]
    return np.ascontiguousarray(dx), dw, db


def relu_forward(x: np.ndarray, inplace: bool = False):
    """Returns (out, mask). `inplace` clamps a temporary the caller owns."""
    out = np.maximum(x, 0.0, out=x) if inplace else np.maximum(x, 0.0)
    return out, out > 0.0


def relu_backward(dout: np.ndarray, mask: np.ndarray,
                  inplace: bool = False) -> np.ndarray:
    if inplace:
        return np.multiply(dout, mask, out=dout)
    return dout * mask


def global_avg_pool_forward(x: np.ndarray):
    """(B, C, H, W) -> (B, C) spatial mean."""
    return x.mean(axis=(2, 3)), x.shape


def global_avg_pool_backward(dout: np.ndarray, x_shape) -> np.ndarray:
    b, c, h, w = x_shape
    return np.broadcast_to(dout[:, :, None, None] / (h * w), x_shape).copy()


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (B, F); w: (F, U); b: (U,)."""
    return x @ w + b, (x, w)


def dense_backward(dout: np.ndarray, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and its gradient w.r.t. logits.

    logits: (B, K); labels: (B,) int class indices.
    """
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    batch = logits.shape[0]
    loss = -float(log_probs[np.arange(batch), labels].mean())
    dlogits = exp / total
    dlogits[np.arange(batch), labels] -= 1.0
    return loss, dlogits / batch
