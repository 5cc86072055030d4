#!/usr/bin/env python3
"""
===============================================================================
資料集與退化 / Dataset Index & Degradation
===============================================================================

目錄慣例：
    <root>/HR/*.png
    <root>/LRx<s>/*.png      同檔名（stem）配對

HR 尺寸不是 s 的倍數時，先置中裁到可整除（degrade 與載入都用同一規則），
所以 LR 與 HR 永遠嚴格 s 倍對齊。
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from scripts.config import Config
from scripts.errors import DatasetError
from scripts.imaging.color import to_float, to_u8
from scripts.imaging.png_io import load_png, read_ihdr, save_png
from scripts.imaging.resize import bicubic_resize

logger = logging.getLogger(__name__)


@dataclass
class DatasetIndex:
    pairs: List[Tuple[Path, Path]]
    scale: int

    def __len__(self):
        return len(self.pairs)

    @property
    def names(self) -> List[str]:
        return [hr.stem for _, hr in self.pairs]

    @classmethod
    def from_dirs(cls, lr_dir, hr_dir, scale: Optional[int] = None) -> 'DatasetIndex':
        lr_dir, hr_dir = Path(lr_dir), Path(hr_dir)
        for d in (lr_dir, hr_dir):
            if not d.is_dir():
                raise DatasetError(f'目錄不存在: {d}')
        hr_files = {p.stem: p for p in sorted(hr_dir.glob('*.png'))}
        lr_files = {p.stem: p for p in sorted(lr_dir.glob('*.png'))}
        if not hr_files and not lr_files:
            raise DatasetError(f'資料集是空的: {hr_dir}, {lr_dir}')
        unpaired = sorted(set(hr_files) ^ set(lr_files))
        if unpaired:
            raise DatasetError(f'有 {len(unpaired)} 個檔案無法配對: {unpaired[:5]}')
        pairs = [(lr_files[stem], hr_files[stem]) for stem in sorted(hr_files)]
        if scale is None:
            scale = _infer_scale(pairs[0])
        return cls(pairs=pairs, scale=int(scale))

    @classmethod
    def from_root(cls, root, scale: int) -> 'DatasetIndex':
        root = Path(root)
        return cls.from_dirs(root / Config.lr_dirname(scale), root / Config.HR_DIRNAME, scale)


def _infer_scale(pair: Tuple[Path, Path]) -> int:
    lr, hr = read_ihdr(pair[0]), read_ihdr(pair[1])
    scale = hr['height'] // max(lr['height'], 1)
    if scale < 1:
        raise DatasetError(f'無法從 {pair[0].name} 推得放大倍率')
    return scale


def modcrop(img: np.ndarray, scale: int) -> np.ndarray:
    """[3,H,W] 置中裁成 H、W 都是 scale 的倍數"""
    _, h, w = img.shape
    nh, nw = h - h % scale, w - w % scale
    if nh < 1 or nw < 1:
        raise DatasetError(f'影像 {h}x{w} 小於倍率 {scale}')
    top, left = (h - nh) // 2, (w - nw) // 2
    return np.ascontiguousarray(img[:, top:top + nh, left:left + nw])


def load_pair(lr_path, hr_path, scale: int) -> Tuple[np.ndarray, np.ndarray]:
    lr = to_float(load_png(lr_path))
    hr = modcrop(to_float(load_png(hr_path)), scale)
    if hr.shape[1] != scale * lr.shape[1] or hr.shape[2] != scale * lr.shape[2]:
        raise DatasetError(
            f'{Path(hr_path).name}: HR {hr.shape[1:]} 不是 LR {lr.shape[1:]} 的 {scale} 倍')
    return lr, hr


def load_pairs(index: DatasetIndex) -> List[Tuple[np.ndarray, np.ndarray]]:
    return [load_pair(lr, hr, index.scale) for lr, hr in index.pairs]


def degrade_image(hr: np.ndarray, scale: int) -> np.ndarray:
    """HR float → 置中裁切 → bicubic 縮小 → 8-bit 量化，回傳 uint8 [h,w,3]"""
    hr = modcrop(hr, scale)
    _, h, w = hr.shape
    return to_u8(bicubic_resize(hr, h // scale, w // scale))


def degrade_directory(hr_dir, out_dir, scale: int, show_progress: bool = True) -> Path:
    """把 hr_dir/*.png 退化寫到 out_dir/LRx<s>/"""
    hr_dir = Path(hr_dir)
    files = sorted(hr_dir.glob('*.png')) if hr_dir.is_dir() else []
    if not files:
        raise DatasetError(f'HR 目錄沒有 PNG: {hr_dir}')
    target = Path(out_dir) / Config.lr_dirname(scale)
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetError(f'無法建立輸出目錄 {target}: {e}') from None

    cropped = 0
    for path in tqdm(files, desc=f'degrade x{scale}', disable=not show_progress):
        hr = to_float(load_png(path))
        if hr.shape[1] % scale or hr.shape[2] % scale:
            cropped += 1
        try:
            save_png(degrade_image(hr, scale), target / f'{path.stem}.png')
        except OSError as e:
            raise DatasetError(f'無法寫入 {target}: {e}') from None
    logger.info('degrade: %d 張寫入 %s（%d 張先置中裁切）', len(files), target, cropped)
    return target


def synthesize_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """隨機方向正弦波疊加 + 隨機矩形，uint8 [size,size,3]"""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((3, size, size))
    for _ in range(int(rng.integers(3, 7))):
        theta = rng.uniform(0, np.pi)
        freq = rng.uniform(0.05, 0.6)
        phase = rng.uniform(0, 2 * np.pi)
        color = rng.uniform(0.2, 1.0, size=3)
        wave = np.sin(freq * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
        img += color[:, None, None] * wave[None]
    img = (img - img.min()) / max(img.max() - img.min(), 1e-8)
    for _ in range(int(rng.integers(2, 6))):
        h, w = rng.integers(size // 8, size // 2, size=2)
        top, left = rng.integers(0, size - h), rng.integers(0, size - w)
        img[:, top:top + h, left:left + w] = rng.uniform(0, 1, size=3)[:, None, None]
    return to_u8(img)


def synthesize_dataset(root, count: int = 20, size: int = 64, scale: int = 2,
                       seed: int = 0, show_progress: bool = True) -> DatasetIndex:
    """產生 <root>/HR 與 <root>/LRx<s>，固定 seed 下逐位元可重現"""
    if count < 1 or size < 8:
        raise DatasetError(f'合成資料集參數無效: count={count}, size={size}')
    root = Path(root)
    hr_dir = root / Config.HR_DIRNAME
    hr_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(count):
        save_png(synthesize_texture(rng, size), hr_dir / f'tex_{i:03d}.png')
    degrade_directory(hr_dir, root, scale, show_progress=show_progress)
    return DatasetIndex.from_root(root, scale)
