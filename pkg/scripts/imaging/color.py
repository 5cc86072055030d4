#!/usr/bin/env python3
"""
===============================================================================
色彩轉換 / Color Conversion
===============================================================================
ImageU8: uint8 [H,W,3]（交錯 RGB）
ImageF : float32 [3,H,W]（通道優先，名目範圍 [0,1]）
"""

import numpy as np

# BT.601 studio swing（SR 評測慣例）
Y_COEFFS = (65.481, 128.553, 24.966)
Y_OFFSET = 16.0


def to_float(img: np.ndarray) -> np.ndarray:
    """uint8 [H,W,3] → float32 [3,H,W]，v/255"""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f'to_float 需要 [H,W,3]，得到 {arr.shape}')
    return np.ascontiguousarray(arr.transpose(2, 0, 1).astype(np.float32) / np.float32(255.0))


def to_u8(img: np.ndarray) -> np.ndarray:
    """float [3,H,W] → uint8 [H,W,3]，round(v·255) 四捨五入（.5 進位）並夾到 [0,255]"""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f'to_u8 需要 [3,H,W]，得到 {arr.shape}')
    scaled = np.clip(np.nan_to_num(arr * 255.0, nan=0.0), 0.0, 255.0)
    return np.ascontiguousarray(np.floor(scaled + 0.5).astype(np.uint8).transpose(1, 2, 0))


def quantize(img: np.ndarray) -> np.ndarray:
    """float → 8-bit → float，模擬存成 PNG 再讀回"""
    return to_float(to_u8(img))


def rgb_to_y255(img: np.ndarray) -> np.ndarray:
    """float [3,H,W] in [0,1] → Y 平面，範圍 [16, 235]（float64）"""
    arr = np.asarray(img, dtype=np.float64)
    r, g, b = arr[0], arr[1], arr[2]
    return Y_COEFFS[0] * r + Y_COEFFS[1] * g + Y_COEFFS[2] * b + Y_OFFSET


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """Y = (65.481·R + 128.553·G + 24.966·B + 16) / 255，範圍 [16/255, 235/255]"""
    return rgb_to_y255(img) / 255.0
