#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""資料夾層級的 SR 評測：逐張推論 → Y 通道 PSNR / SSIM → CSV 報表。

三種上採樣來源：
    checkpoint 的 online 權重      --weights online（預設）
    checkpoint 的 EMA target 權重  --weights target
    純 bicubic 放大（基準線）        --ckpt none

報表欄位 `name,psnr_db,ssim`，最後一列是 MEAN。
邊框裁切預設等於放大倍率，實際用的值會印在 [Eval] 那一行。
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from scripts.engine import Tensor, no_tape
from scripts.errors import DatasetError, ShapeError
from scripts.imaging.color import quantize, to_float, to_u8
from scripts.imaging.dataset import DatasetIndex, load_pairs
from scripts.imaging.png_io import load_png
from scripts.imaging.resize import bicubic_resize
from scripts.analysis.metrics import psnr_y, ssim_y
from scripts.models import ProjectionHead, SRNetwork
from scripts.training.augment import ELEMENTS, apply_array, inverse
from scripts.training.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)

WEIGHT_CHOICES = ('online', 'target')
MEAN_ROW = 'MEAN'

Upscaler = Callable[[np.ndarray], np.ndarray]


@dataclass
class EvalReport:
    shave: int
    names: List[str] = field(default_factory=list)
    psnr: List[float] = field(default_factory=list)
    ssim: List[float] = field(default_factory=list)
    weights: str = 'online'

    def add(self, name: str, psnr_db: float, ssim_value: float) -> None:
        self.names.append(name)
        self.psnr.append(psnr_db)
        self.ssim.append(ssim_value)

    def __len__(self):
        return len(self.names)

    @property
    def mean_psnr(self) -> float:
        return math.fsum(self.psnr) / len(self.psnr) if self.psnr else float('nan')

    @property
    def mean_ssim(self) -> float:
        return math.fsum(self.ssim) / len(self.ssim) if self.ssim else float('nan')

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({'name': self.names, 'psnr_db': self.psnr, 'ssim': self.ssim})
        mean = pd.DataFrame({'name': [MEAN_ROW], 'psnr_db': [self.mean_psnr], 'ssim': [self.mean_ssim]})
        return pd.concat([df, mean], ignore_index=True)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format='%.6f')
        return path


# ---------------------------------------------------------------------------
# 上採樣來源
# ---------------------------------------------------------------------------
def super_resolve(net: SRNetwork, img: np.ndarray) -> np.ndarray:
    """ImageF [3,h,w] → [3,sh,sw]，不記錄 tape"""
    with no_tape():
        out = net(Tensor(np.asarray(img, dtype=np.float32)[None]))
    return out.data[0]


def self_ensemble(net: SRNetwork, img: np.ndarray) -> np.ndarray:
    """8 個翻轉/旋轉各推論一次、轉回原方向後取平均"""
    acc = None
    for g in ELEMENTS:
        view = apply_array(g, img, require_square=False)
        out = apply_array(inverse(g), super_resolve(net, view), require_square=False)
        acc = out.astype(np.float64) if acc is None else acc + out
    return (acc / len(ELEMENTS)).astype(np.float32)


def network_upscaler(net: SRNetwork, ensemble: bool = False) -> Upscaler:
    if ensemble:
        return lambda img: self_ensemble(net, img)
    return lambda img: super_resolve(net, img)


def bicubic_upscaler(scale: int) -> Upscaler:
    def upscale(img: np.ndarray) -> np.ndarray:
        _, h, w = img.shape
        return bicubic_resize(img, scale * h, scale * w)
    return upscale


# ---------------------------------------------------------------------------
# 評分
# ---------------------------------------------------------------------------
def score_images(sr: np.ndarray, hr: np.ndarray, shave: int,
                 requantize: bool = False) -> Tuple[float, float]:
    if sr.shape != hr.shape:
        raise DatasetError(f'放大後尺寸 {sr.shape[1:]} 與 HR {hr.shape[1:]} 不符')
    if requantize:
        sr = quantize(sr)
    return psnr_y(sr, hr, shave), ssim_y(sr, hr, shave)


def evaluate_pairs(upscale: Upscaler, pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
                   names: Sequence[str], shave: int, requantize: bool = False,
                   weights: str = 'online', show_progress: bool = False) -> EvalReport:
    if not pairs:
        raise DatasetError('評測集是空的')
    report = EvalReport(shave=shave, weights=weights)
    for name, (lr, hr) in tqdm(list(zip(names, pairs)), desc='eval', disable=not show_progress):
        p, s = score_images(upscale(lr), hr, shave, requantize)
        report.add(name, p, s)
    return report


def select_weights(state, weights: str) -> SRNetwork:
    if weights not in WEIGHT_CHOICES:
        raise ValueError(f'weights 必須是 {WEIGHT_CHOICES} 之一（{weights}）')
    return state.online if weights == 'online' else state.target


def evaluate_dir(ckpt, lr_dir, hr_dir, shave: Optional[int] = None, weights: str = 'online',
                 ensemble: bool = False, requantize: bool = False, report_path=None,
                 show_progress: bool = False) -> EvalReport:
    """ckpt=None 時跑 bicubic 基準線，倍率由檔案尺寸推得"""
    if ckpt is None:
        index = DatasetIndex.from_dirs(lr_dir, hr_dir)
        upscale = bicubic_upscaler(index.scale)
        weights = 'bicubic'
    else:
        state = load_checkpoint(ckpt)
        index = DatasetIndex.from_dirs(lr_dir, hr_dir, scale=state.config.scale)
        upscale = network_upscaler(select_weights(state, weights), ensemble)

    shave = index.scale if shave is None else shave
    report = evaluate_pairs(upscale, load_pairs(index), index.names, shave,
                            requantize=requantize, weights=weights, show_progress=show_progress)
    logger.info('eval %s: %d 張, shave=%d, PSNR %.4f dB, SSIM %.4f',
                weights, len(report), shave, report.mean_psnr, report.mean_ssim)
    if report_path:
        report.to_csv(report_path)
    return report


# ---------------------------------------------------------------------------
# 投影頭偏離圖
# ---------------------------------------------------------------------------
def divergence_map(net: SRNetwork, proj: ProjectionHead, lr: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """|f_proj(I_SR) − I_SR| 取通道平均、除以最大值 → 8-bit 灰階。

    回傳 (map uint8 [H,W], PSNR, SSIM)，後兩者是 online 輸出與投影輸出之間的 Y 通道分數。
    """
    with no_tape():
        sr = net(Tensor(np.asarray(lr, dtype=np.float32)[None]))
        projected = proj(sr)
    a, b = sr.data[0], projected.data[0]
    diff = np.abs(b.astype(np.float64) - a).mean(axis=0)
    peak = diff.max()
    norm = diff / peak if peak > 0 else np.zeros_like(diff)
    img = np.floor(np.clip(norm, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    try:
        similarity = ssim_y(b, a)
    except ShapeError:
        similarity = float('nan')
    return img, psnr_y(b, a), similarity


def upscale_file(upscale: Upscaler, path) -> np.ndarray:
    """PNG → 放大後的 uint8 [H,W,3]"""
    return to_u8(upscale(to_float(load_png(path))))
