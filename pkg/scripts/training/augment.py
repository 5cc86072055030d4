#!/usr/bin/env python3
"""
===============================================================================
翻轉旋轉增強 / Dihedral Flip-Rotation Group
===============================================================================

8 個元素 (k, h)：先水平翻轉 h 次、再逆時針轉 k 個 90°。
    y = rotate^k(flip^h(x))

每個元素都有精確的反元素，兩兩合成仍在群內。作用在最後兩軸，
純粹是索引排列，沒有插值，所以 apply(inverse(g), apply(g, x)) 逐位元等於 x。

一個 90° 的慣例：out[i][j] = in[j][W−1−i]（即 np.rot90）。
flip 與 rotate 的交換規則：flip ∘ rot^k = rot^(−k) ∘ flip。
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from scripts.engine.tensor import Tensor, record
from scripts.errors import ShapeError


@dataclass(frozen=True)
class DihedralOp:
    k: int = 0      # 逆時針 90° 的次數
    h: int = 0      # 是否先水平翻轉

    def __post_init__(self):
        if self.k not in (0, 1, 2, 3) or self.h not in (0, 1):
            raise ValueError(f'DihedralOp 需要 k∈{{0,1,2,3}}、h∈{{0,1}}，得到 ({self.k}, {self.h})')

    @property
    def is_identity(self) -> bool:
        return self.k == 0 and self.h == 0

    def inverse(self) -> 'DihedralOp':
        return inverse(self)

    def then(self, other: 'DihedralOp') -> 'DihedralOp':
        """先做 self、再做 other"""
        return compose(other, self)

    def __call__(self, x):
        return apply(self, x)

    def __str__(self):
        return f'rot{90 * self.k}' + ('+flip' if self.h else '')


ELEMENTS: Tuple[DihedralOp, ...] = tuple(DihedralOp(k, h) for k in range(4) for h in range(2))
IDENTITY = ELEMENTS[0]


def apply_array(g: DihedralOp, arr: np.ndarray, require_square: bool = True) -> np.ndarray:
    """require_square=False 時允許長方形影像做奇數次旋轉（H、W 互換）"""
    if arr.ndim < 2:
        raise ShapeError(f'apply 至少需要 2 維，得到 {arr.shape}')
    if require_square and g.k % 2 and arr.shape[-1] != arr.shape[-2]:
        raise ShapeError(f'{g} 是奇數次旋轉，需要方形空間尺寸，得到 {arr.shape[-2:]}')
    out = arr[..., ::-1] if g.h else arr
    if g.k:
        out = np.rot90(out, g.k, axes=(-2, -1))
    return np.ascontiguousarray(out)


def apply(g: DihedralOp, img):
    """作用在最後兩軸；Tensor 輸入會記錄在 tape 上，反向就是套反元素。"""
    if not isinstance(img, Tensor):
        return apply_array(g, np.asarray(img))
    out = Tensor(apply_array(g, img.data))
    inv = inverse(g)

    def backward_fn(grad):
        return (apply_array(inv, grad),)

    return record('dihedral', out, (img,), backward_fn)


def apply_each(ops: Sequence[DihedralOp], batch):
    """第 i 個樣本套 ops[i]（沿第 0 軸）"""
    data = batch.data if isinstance(batch, Tensor) else np.asarray(batch)
    if len(ops) != data.shape[0]:
        raise ShapeError(f'apply_each: {len(ops)} 個操作對 {data.shape[0]} 個樣本')
    out_data = np.stack([apply_array(g, data[i]) for i, g in enumerate(ops)])
    if not isinstance(batch, Tensor):
        return out_data
    inverses = [inverse(g) for g in ops]

    def backward_fn(grad):
        return (np.stack([apply_array(inv, grad[i]) for i, inv in enumerate(inverses)]),)

    return record('dihedral_each', Tensor(out_data), (batch,), backward_fn)


def inverse(g: DihedralOp) -> DihedralOp:
    # 純旋轉的反元素是反向旋轉；帶翻轉的元素都是自己的反元素
    if g.h:
        return g
    return DihedralOp((4 - g.k) % 4, 0)


def compose(g2: DihedralOp, g1: DihedralOp) -> DihedralOp:
    """apply(compose(g2, g1), x) == apply(g2, apply(g1, x))"""
    # rot^k2 flip^h2 rot^k1 flip^h1 = rot^(k2 ± k1) flip^(h1 xor h2)
    k = (g2.k - g1.k) % 4 if g2.h else (g2.k + g1.k) % 4
    return DihedralOp(k, g1.h ^ g2.h)


def sample(rng: np.random.Generator) -> DihedralOp:
    """8 個元素均勻抽一個，每次固定消耗一次 integers()"""
    return ELEMENTS[int(rng.integers(0, len(ELEMENTS)))]


def sample_views(rng: np.random.Generator, n: int) -> Tuple[List[DihedralOp], List[DihedralOp]]:
    """每個樣本獨立抽 (g1, g2)，順序固定為 g1_0, g2_0, g1_1, g2_1, ...

    不論 alpha 為何 g2 都照抽，保證 α=0 與純監督訓練消耗同樣的亂數。
    """
    g1s, g2s = [], []
    for _ in range(n):
        g1s.append(sample(rng))
        g2s.append(sample(rng))
    return g1s, g2s
