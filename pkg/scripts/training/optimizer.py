#!/usr/bin/env python3
"""
===============================================================================
Adam 與 EMA / Adam Optimizer & EMA Target Update
===============================================================================

adam_step 只碰 online + 投影頭的參數；target 只由 ema_update 改動，
兩者在名稱空間上完全分開（target 沒有 Adam moments）。
"""

from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

import numpy as np

from scripts.engine import Tensor
from scripts.errors import NumericFault, ShapeError


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def from_train_config(cls, cfg) -> 'AdamHyper':
        return cls(lr=cfg.learning_rate, beta1=cfg.adam_beta1,
                   beta2=cfg.adam_beta2, eps=cfg.adam_epsilon)


def zero_moments(params: Iterable[Tuple[str, Tensor]]):
    m = OrderedDict((name, np.zeros_like(p.data)) for name, p in params)
    v = OrderedDict((name, np.zeros_like(arr)) for name, arr in m.items())
    return m, v


def adam_step(params: Dict[str, Tensor], grads: Dict[str, np.ndarray],
              m: Dict[str, np.ndarray], v: Dict[str, np.ndarray],
              t: int, hyper: AdamHyper) -> None:
    """就地更新 params / m / v。t 從 1 起算。

    m ← β1·m + (1−β1)·g
    v ← β2·v + (1−β2)·g²
    p ← p − lr · (m / (1−β1^t)) / (√(v / (1−β2^t)) + ε)

    任一梯度非有限值時整步放棄，參數與 moments 都不動。
    """
    if t < 1:
        raise ValueError(f'Adam 的步數從 1 起算，得到 t={t}')
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericFault(f'{name} 的梯度含 NaN/Inf，放棄這一步')

    b1 = np.float32(hyper.beta1)
    b2 = np.float32(hyper.beta2)
    one_b1 = np.float32(1.0 - hyper.beta1)
    one_b2 = np.float32(1.0 - hyper.beta2)
    bc1 = np.float32(1.0 - hyper.beta1 ** t)
    bc2 = np.float32(1.0 - hyper.beta2 ** t)
    lr = np.float32(hyper.lr)
    eps = np.float32(hyper.eps)

    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        g = g.astype(np.float32, copy=False)
        m_new = b1 * m[name] + one_b1 * g
        v_new = b2 * v[name] + one_b2 * (g * g)
        m_hat = m_new / bc1
        v_hat = v_new / bc2
        p.data = (p.data - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype)
        m[name] = m_new.astype(np.float32)
        v[name] = v_new.astype(np.float32)


def ema_update(target, online, beta: float):
    """θ̂ ← β·θ̂ + (1−β)·θ，逐元素，不經過任何梯度。

    在 float64 下算完再捨入回 float32，只有一次捨入：
    β=0 時 θ̂ 逐位元等於 θ，β=1 時 θ̂ 完全不變。
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f'EMA beta 必須在 [0, 1]，得到 {beta}')
    if not target.same_namespace(online):
        raise ShapeError('target 與 online 的參數名稱/形狀不一致')
    for (name, tp), (_, op) in zip(target.named_parameters(), online.named_parameters()):
        mixed = beta * tp.data.astype(np.float64) + (1.0 - beta) * op.data.astype(np.float64)
        tp.data = mixed.astype(tp.dtype)
    return target
