#!/usr/bin/env python3
"""
===============================================================================
可微分運算 / Differentiable Ops
===============================================================================

SR 網路只需要這幾個運算：
  conv2d（stride 1、對稱補零）、relu、add / sub / scale、
  pixel_shuffle 與其逆排列、nearest 上採樣、sum、L1 / L2 損失。

運算保留輸入的 dtype（訓練 float32、grad_check float64）。
所有歸約都用 numpy 的固定順序，同樣輸入得到逐位元相同的輸出。
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scripts.engine.tensor import Tensor, as_tensor, record
from scripts.errors import NumericFault, ShapeError

ELEMENTWISE_KINDS = ('add', 'sub', 'scale_by_constant')


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericFault(f'{op} 輸出含 NaN/Inf')


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f'{op}: 形狀不符 {a.shape} vs {b.shape}')


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------
def conv2d(x: Tensor, weight: Tensor, bias: Tensor, padding: int = 0) -> Tensor:
    """Cross-correlation，stride 固定 1，四周補 padding 寬的零。

    x [N,Cin,H,W]、weight [Cout,Cin,kH,kW]、bias [Cout]
    → [N, Cout, H+2p-kH+1, W+2p-kW+1]
    """
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f'conv2d 需要 4 維輸入與權重，得到 {x.shape} / {weight.shape}')
    n, cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    if cin != cin_w:
        raise ShapeError(f'conv2d: 輸入通道 {cin} 與權重通道 {cin_w} 不符')
    if bias.shape != (cout,):
        raise ShapeError(f'conv2d: bias 形狀應為 ({cout},)，得到 {bias.shape}')
    p = int(padding)
    if p < 0:
        raise ShapeError(f'conv2d: padding 不可為負 ({p})')
    ho, wo = h + 2 * p - kh + 1, w + 2 * p - kw + 1
    if ho < 1 or wo < 1:
        raise ShapeError(f'conv2d: 輸出尺寸 {ho}x{wo} 無效')

    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    cols = sliding_window_view(xp, (kh, kw), axis=(2, 3))      # [N,Cin,Ho,Wo,kH,kW]
    out = np.tensordot(cols, weight.data, axes=([1, 4, 5], [1, 2, 3]))   # [N,Ho,Wo,Cout]
    out = out.transpose(0, 3, 1, 2) + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out, dtype=x.dtype)
    _check_finite(out, 'conv2d')

    def backward_fn(g):
        return _conv2d_backward(g, cols, x.shape, weight.data, p)

    return record('conv2d', Tensor(out), (x, weight, bias), backward_fn)


def _conv2d_backward(g, cols, x_shape, w, p):
    n, cin, h, wd = x_shape
    cout, _, kh, kw = w.shape
    ho, wo = g.shape[2], g.shape[3]
    gw = np.tensordot(g, cols, axes=([0, 2, 3], [0, 2, 3]))    # [Cout,Cin,kH,kW]
    gb = g.sum(axis=(0, 2, 3))
    gxp = np.zeros((n, cin, h + 2 * p, wd + 2 * p), dtype=g.dtype)
    for i in range(kh):
        for j in range(kw):
            contrib = np.tensordot(g, w[:, :, i, j], axes=([1], [0]))   # [N,Ho,Wo,Cin]
            gxp[:, :, i:i + ho, j:j + wo] += contrib.transpose(0, 3, 1, 2)
    gx = gxp[:, :, p:p + h, p:p + wd]
    return gx, gw, gb


# ---------------------------------------------------------------------------
# 逐元素
# ---------------------------------------------------------------------------
def relu(x: Tensor) -> Tensor:
    """max(x, 0)；x 恰為 0 處的導數定義為 0"""
    x = as_tensor(x)
    mask = x.data > 0
    out = np.where(mask, x.data, 0).astype(x.dtype)

    def backward_fn(g):
        return (g * mask,)

    return record('relu', Tensor(out), (x,), backward_fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, 'add')
    out = a.data + b.data

    def backward_fn(g):
        return g, g

    return record('add', Tensor(out, dtype=a.dtype), (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, 'sub')
    out = a.data - b.data

    def backward_fn(g):
        return g, -g

    return record('sub', Tensor(out, dtype=a.dtype), (a, b), backward_fn)


def scale(x: Tensor, constant) -> Tensor:
    """乘上常數（純量或同形陣列，不參與微分）"""
    x = as_tensor(x)
    c = np.asarray(constant.data if isinstance(constant, Tensor) else constant, dtype=x.dtype)
    if c.ndim and c.shape != x.shape:
        raise ShapeError(f'scale: 常數形狀 {c.shape} 與張量 {x.shape} 不符')
    out = x.data * c

    def backward_fn(g):
        return (g * c,)

    return record('scale', Tensor(out, dtype=x.dtype), (x,), backward_fn)


def elementwise(kind: str, a: Tensor, b) -> Tensor:
    """kind ∈ {add, sub, scale_by_constant}"""
    if kind == 'add':
        return add(a, b)
    if kind == 'sub':
        return sub(a, b)
    if kind == 'scale_by_constant':
        return scale(a, b)
    raise ValueError(f'未知的 elementwise kind: {kind!r}（可用 {ELEMENTWISE_KINDS}）')


def tensor_sum(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.asarray(x.data.sum(), dtype=x.dtype)

    def backward_fn(g):
        return (np.broadcast_to(g, x.shape),)

    return record('sum', Tensor(out), (x,), backward_fn)


# ---------------------------------------------------------------------------
# 空間重排
# ---------------------------------------------------------------------------
def _shuffle_array(arr: np.ndarray, r: int) -> np.ndarray:
    n, c, h, w = arr.shape
    oc = c // (r * r)
    out = arr.reshape(n, oc, r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(out.reshape(n, oc, h * r, w * r))


def _unshuffle_array(arr: np.ndarray, r: int) -> np.ndarray:
    n, c, h, w = arr.shape
    out = arr.reshape(n, c, h // r, r, w // r, r).transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(out.reshape(n, c * r * r, h // r, w // r))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """out[n, c, r·i+di, r·j+dj] = in[n, c·r² + di·r + dj, i, j]"""
    x = as_tensor(x)
    r = int(r)
    if x.ndim != 4 or r < 1 or x.shape[1] % (r * r):
        raise ShapeError(f'pixel_shuffle: 通道數 {x.shape[1] if x.ndim == 4 else x.shape} 無法被 r²={r * r} 整除')
    out = _shuffle_array(x.data, r)

    def backward_fn(g):
        return (_unshuffle_array(g, r),)

    return record('pixel_shuffle', Tensor(out), (x,), backward_fn)


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """pixel_shuffle 的逆排列"""
    x = as_tensor(x)
    r = int(r)
    if x.ndim != 4 or r < 1 or x.shape[2] % r or x.shape[3] % r:
        raise ShapeError(f'pixel_unshuffle: 空間尺寸 {x.shape} 無法被 r={r} 整除')
    out = _unshuffle_array(x.data, r)

    def backward_fn(g):
        return (_shuffle_array(g, r),)

    return record('pixel_unshuffle', Tensor(out), (x,), backward_fn)


def upsample_nearest(x: Tensor, r: int) -> Tensor:
    """最近鄰複製放大 r 倍。無參數、對翻轉旋轉嚴格等變。"""
    x = as_tensor(x)
    r = int(r)
    if x.ndim != 4 or r < 1:
        raise ShapeError(f'upsample_nearest: 需要 4 維輸入與 r ≥ 1，得到 {x.shape}, r={r}')
    out = np.repeat(np.repeat(x.data, r, axis=2), r, axis=3)
    n, c, h, w = x.shape

    def backward_fn(g):
        return (g.reshape(n, c, h, r, w, r).sum(axis=(3, 5)),)

    return record('upsample_nearest', Tensor(out), (x,), backward_fn)


# ---------------------------------------------------------------------------
# 損失
# ---------------------------------------------------------------------------
def l1_loss(a: Tensor, b: Tensor) -> Tensor:
    """mean |a − b|；a = b 處的次梯度取 0"""
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, 'l1_loss')
    diff = a.data - b.data
    out = np.asarray(np.mean(np.abs(diff)), dtype=a.dtype)
    _check_finite(out, 'l1_loss')
    n = diff.size

    def backward_fn(g):
        ga = g * np.sign(diff) / n
        return ga, -ga

    return record('l1_loss', Tensor(out), (a, b), backward_fn)


def l2_loss(a: Tensor, b: Tensor) -> Tensor:
    """mean (a − b)²"""
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, 'l2_loss')
    diff = a.data - b.data
    out = np.asarray(np.mean(diff * diff), dtype=a.dtype)
    _check_finite(out, 'l2_loss')
    n = diff.size

    def backward_fn(g):
        ga = g * 2 * diff / n
        return ga, -ga

    return record('l2_loss', Tensor(out), (a, b), backward_fn)


LOSSES = {'L1': l1_loss, 'L2': l2_loss}


def loss_by_name(name: str):
    try:
        return LOSSES[name.upper()]
    except KeyError:
        raise ValueError(f'未知的損失 {name!r}（可用 {sorted(LOSSES)}）') from None
