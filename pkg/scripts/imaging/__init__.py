"""
影像處理 / Imaging

PNG 讀寫、色彩轉換、bicubic 退化、對齊 patch 取樣與資料集索引。
"""

from .png_io import load_png, save_png, read_ihdr
from .color import to_float, to_u8, quantize, rgb_to_y, rgb_to_y255
from .resize import bicubic_resize
from .patches import sample_patch_pair, PatchBatchSampler
from .dataset import (
    DatasetIndex,
    load_pair,
    load_pairs,
    modcrop,
    degrade_image,
    degrade_directory,
    synthesize_dataset,
)

__all__ = [
    'load_png',
    'save_png',
    'read_ihdr',
    'to_float',
    'to_u8',
    'quantize',
    'rgb_to_y',
    'rgb_to_y255',
    'bicubic_resize',
    'sample_patch_pair',
    'PatchBatchSampler',
    'DatasetIndex',
    'load_pair',
    'load_pairs',
    'modcrop',
    'degrade_image',
    'degrade_directory',
    'synthesize_dataset',
]
