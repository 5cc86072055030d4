#!/usr/bin/env python3
"""
===============================================================================
對齊 patch 取樣 / Aligned Patch Sampling
===============================================================================
LR 左上角在合法範圍內均勻抽，HR 取同一位置的 s 倍。
每個樣本固定消耗：1 次選圖 + 2 次取角落。
"""

from typing import List, Sequence, Tuple

import numpy as np

from scripts.errors import DatasetError

ImagePair = Tuple[np.ndarray, np.ndarray]


def sample_patch_pair(rng: np.random.Generator, pair: ImagePair, lr_patch: int,
                      scale: int) -> Tuple[np.ndarray, np.ndarray]:
    """→ (LR [3,p,p], HR [3,sp,sp])"""
    lr, hr = pair
    _, h, w = lr.shape
    if h < lr_patch or w < lr_patch:
        raise DatasetError(f'影像 {h}x{w} 小於 patch {lr_patch}')
    if hr.shape[1] != scale * h or hr.shape[2] != scale * w:
        raise DatasetError(f'HR {hr.shape[1:]} 不是 LR {lr.shape[1:]} 的 {scale} 倍')
    top = int(rng.integers(0, h - lr_patch + 1))
    left = int(rng.integers(0, w - lr_patch + 1))
    hp = scale * lr_patch
    lr_crop = lr[:, top:top + lr_patch, left:left + lr_patch]
    hr_crop = hr[:, scale * top:scale * top + hp, scale * left:scale * left + hp]
    return np.ascontiguousarray(lr_crop), np.ascontiguousarray(hr_crop)


class PatchBatchSampler:
    """從記憶體中的影像對組 batch。順序只取決於傳入的 rng 狀態。"""

    def __init__(self, pairs: Sequence[ImagePair], lr_patch: int, scale: int, batch_size: int):
        if not pairs:
            raise DatasetError('沒有可用的訓練影像')
        for lr, _ in pairs:
            if min(lr.shape[1:]) < lr_patch:
                raise DatasetError(f'影像 {lr.shape[1:]} 小於 patch {lr_patch}')
        self.pairs: List[ImagePair] = list(pairs)
        self.lr_patch = lr_patch
        self.scale = scale
        self.batch_size = batch_size

    def next_batch(self, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        lrs, hrs = [], []
        for _ in range(self.batch_size):
            pair = self.pairs[int(rng.integers(0, len(self.pairs)))]
            lr, hr = sample_patch_pair(rng, pair, self.lr_patch, self.scale)
            lrs.append(lr)
            hrs.append(hr)
        return np.stack(lrs), np.stack(hrs)
