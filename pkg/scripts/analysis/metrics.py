#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Y 通道上的 PSNR / SSIM（SR 評測慣例）。

兩者都先轉成 0–255 的 Y 平面再裁掉 `shave` 像素邊框。

PSNR 的 MSE 用 math.fsum 加總：正確捨入、與加總順序無關，
所以對兩張圖做同一個翻轉/旋轉，PSNR 逐位元不變。
SSIM 只取完整落在影像內的視窗（valid，不補邊）。
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scripts.errors import ShapeError
from scripts.imaging.color import rgb_to_y255

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2

# 完全相同的影像回傳 +inf
PSNR_IDENTICAL = float('inf')


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f'影像尺寸不一致: {a.shape} vs {b.shape}')


def shave_border(plane: np.ndarray, shave: int) -> np.ndarray:
    h, w = plane.shape[-2:]
    if shave < 0 or 2 * shave >= min(h, w):
        raise ShapeError(f'shave={shave} 對 {h}x{w} 的影像太大')
    if shave == 0:
        return plane
    return plane[..., shave:h - shave, shave:w - shave]


def psnr(y1: np.ndarray, y2: np.ndarray, data_range: float = PEAK) -> float:
    """兩個同尺寸平面的 PSNR（dB）"""
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    _check_pair(y1, y2)
    diff = (y1 - y2).ravel()
    mse = math.fsum(diff * diff) / diff.size
    if mse == 0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(data_range * data_range / mse)


def psnr_y(a: np.ndarray, b: np.ndarray, shave: int = 0) -> float:
    """ImageF [3,H,W] × 2 → Y 通道 PSNR"""
    _check_pair(np.asarray(a), np.asarray(b))
    return psnr(shave_border(rgb_to_y255(a), shave), shave_border(rgb_to_y255(b), shave))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """正規化的一維高斯核"""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(plane: np.ndarray, g: np.ndarray) -> np.ndarray:
    """可分離的 valid 卷積：先列後行"""
    k = g.size
    rows = np.tensordot(sliding_window_view(plane, k, axis=1), g, axes=([-1], [0]))
    return np.tensordot(sliding_window_view(rows, k, axis=0), g, axes=([-1], [0]))


def ssim(y1: np.ndarray, y2: np.ndarray) -> float:
    """0–255 平面的單尺度 SSIM"""
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    _check_pair(y1, y2)
    if min(y1.shape) < SSIM_WINDOW:
        raise ShapeError(f'SSIM 需要至少 {SSIM_WINDOW}x{SSIM_WINDOW}，得到 {y1.shape}')

    g = gaussian_window()
    mu1, mu2 = _filter_valid(y1, g), _filter_valid(y2, g)
    mu1_sq, mu2_sq, mu12 = mu1 * mu1, mu2 * mu2, mu1 * mu2
    sigma1_sq = _filter_valid(y1 * y1, g) - mu1_sq
    sigma2_sq = _filter_valid(y2 * y2, g) - mu2_sq
    sigma12 = _filter_valid(y1 * y2, g) - mu12

    num = (2.0 * mu12 + SSIM_C1) * (2.0 * sigma12 + SSIM_C2)
    den = (mu1_sq + mu2_sq + SSIM_C1) * (sigma1_sq + sigma2_sq + SSIM_C2)
    ssim_map = num / den
    return math.fsum(ssim_map.ravel()) / ssim_map.size


def ssim_y(a: np.ndarray, b: np.ndarray, shave: int = 0) -> float:
    """ImageF [3,H,W] × 2 → Y 通道 SSIM"""
    _check_pair(np.asarray(a), np.asarray(b))
    return ssim(shave_border(rgb_to_y255(a), shave), shave_border(rgb_to_y255(b), shave))
