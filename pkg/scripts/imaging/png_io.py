#!/usr/bin/env python3
"""
===============================================================================
PNG 讀寫 / PNG I/O
===============================================================================
只接受 8-bit RGB 或 8-bit 灰階（展開成三個相同通道）。
位元深度與色彩類型直接讀 IHDR 判斷：Pillow 會把 16-bit RGB 默默降成 8-bit，
光看 mode 分辨不出來。
"""

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from scripts.errors import ImageFormatError

PNG_SIGNATURE = b'\x89PNG\r\n\x1a\n'
COLOR_GRAY = 0
COLOR_RGB = 2
SUPPORTED_COLOR_TYPES = {COLOR_GRAY: 'grayscale', COLOR_RGB: 'RGB'}
COLOR_TYPE_NAMES = {0: 'grayscale', 2: 'RGB', 3: 'palette', 4: 'grayscale+alpha', 6: 'RGBA'}


def read_ihdr(path) -> dict:
    """回傳 {width, height, bit_depth, color_type}"""
    with open(path, 'rb') as f:
        head = f.read(33)
    if len(head) < 33 or head[:8] != PNG_SIGNATURE or head[12:16] != b'IHDR':
        raise ImageFormatError(f'{path}: 不是 PNG 檔')
    width, height, bit_depth, color_type = struct.unpack('>IIBB', head[16:26])
    return {'width': width, 'height': height, 'bit_depth': bit_depth, 'color_type': color_type}


def load_png(path) -> np.ndarray:
    """→ uint8 陣列 [H, W, 3]"""
    path = Path(path)
    try:
        info = read_ihdr(path)
    except OSError as e:
        raise ImageFormatError(f'{path}: 無法讀取 ({e})') from None
    if info['bit_depth'] != 8:
        raise ImageFormatError(f'{path}: 不支援 {info["bit_depth"]}-bit PNG（只接受 8-bit）')
    if info['color_type'] not in SUPPORTED_COLOR_TYPES:
        kind = COLOR_TYPE_NAMES.get(info['color_type'], f'color type {info["color_type"]}')
        raise ImageFormatError(f'{path}: 不支援 {kind} PNG（只接受 RGB / 灰階）')
    with Image.open(path) as img:
        img.load()
        arr = np.asarray(img.convert('RGB'), dtype=np.uint8)
    return np.ascontiguousarray(arr)


def save_png(img: np.ndarray, path) -> Path:
    """uint8 [H,W,3] 存成 RGB PNG；[H,W] 存成灰階"""
    path = Path(path)
    arr = np.ascontiguousarray(img)
    if arr.dtype != np.uint8:
        raise ImageFormatError(f'save_png 需要 uint8，得到 {arr.dtype}')
    if arr.ndim == 3 and arr.shape[2] == 3:
        mode = 'RGB'
    elif arr.ndim == 2:
        mode = 'L'
    else:
        raise ImageFormatError(f'save_png 需要 [H,W,3] 或 [H,W]，得到 {arr.shape}')
    if min(arr.shape[:2]) < 1:
        raise ImageFormatError(f'影像尺寸無效: {arr.shape}')
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode=mode).save(path, format='PNG')
    return path
