#!/usr/bin/env python3
"""
===============================================================================
雙三次縮放 / Bicubic Resize
===============================================================================

可分離的 cubic convolution（a = −0.5），縮小時核的支撐依倍率放寬（antialias），
與 SR 評測常用的 imresize 行為一致。邊界以座標夾取（複製邊緣像素），
這點與 imresize 的對稱反射不同，所以嚴格比對時排除邊界像素。

權重逐列正規化，常數影像縮放後仍是同一個常數。
"""

import numpy as np

CUBIC_A = -0.5
KERNEL_WIDTH = 4.0


def cubic(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    ax2, ax3 = ax * ax, ax * ax * ax
    near = (CUBIC_A + 2) * ax3 - (CUBIC_A + 3) * ax2 + 1
    far = CUBIC_A * ax3 - 5 * CUBIC_A * ax2 + 8 * CUBIC_A * ax - 4 * CUBIC_A
    return np.where(ax <= 1, near, np.where(ax <= 2, far, 0.0))


def contributions(in_len: int, out_len: int, antialias: bool = True):
    """每個輸出位置的 (來源索引, 權重)，形狀皆為 [out_len, P]"""
    scale = out_len / in_len
    width = KERNEL_WIDTH
    if scale < 1 and antialias:
        kernel = lambda x: scale * cubic(scale * x)  # noqa: E731
        width = KERNEL_WIDTH / scale
    else:
        kernel = cubic

    # 1-based 座標，輸出像素中心對回輸入座標
    x = np.arange(1, out_len + 1, dtype=np.float64)
    u = x / scale + 0.5 * (1 - 1 / scale)
    left = np.floor(u - width / 2)
    taps = int(np.ceil(width)) + 2
    indices = left[:, None] + np.arange(taps, dtype=np.float64)[None, :]
    weights = kernel(u[:, None] - indices)
    weights = weights / weights.sum(axis=1, keepdims=True)
    indices = np.clip(indices, 1, in_len).astype(np.int64) - 1

    keep = np.any(weights != 0, axis=0)
    return indices[:, keep], weights[:, keep]


def _resize_axis(arr: np.ndarray, out_len: int, axis: int, antialias: bool) -> np.ndarray:
    in_len = arr.shape[axis]
    if in_len == out_len:
        return arr
    indices, weights = contributions(in_len, out_len, antialias)
    moved = np.moveaxis(arr, axis, -1)
    gathered = moved[..., indices]                        # [..., out_len, P]
    out = np.einsum('...op,op->...o', gathered, weights)
    return np.moveaxis(out, -1, axis)


def bicubic_resize(img: np.ndarray, out_h: int, out_w: int, antialias: bool = True) -> np.ndarray:
    """[C,H,W] 或 [H,W] → 同樣排列、空間尺寸 out_h×out_w（float32）"""
    if out_h < 1 or out_w < 1:
        raise ValueError(f'輸出尺寸必須 ≥ 1，得到 {out_h}x{out_w}')
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f'bicubic_resize 需要 [C,H,W] 或 [H,W]，得到 {arr.shape}')
    out = _resize_axis(arr, out_h, arr.ndim - 2, antialias)
    out = _resize_axis(out, out_w, arr.ndim - 1, antialias)
    return np.ascontiguousarray(out, dtype=np.float32)
