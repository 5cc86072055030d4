#!/usr/bin/env python3
"""
===============================================================================
SSC 訓練步 / Dual-Branch Self-Supervised Consistency Step
===============================================================================

一步的流程（每個樣本各自抽 g1、g2）：

    I_SR   = f_SR(g1(LR))                       online，記錄在 tape
    I_proj = f_proj(I_SR)                       投影頭，記錄在 tape
    I_tgt  = f̂_SR(g2(LR))                       target，不進 tape（stop-gradient）
    L_r = L1(g1⁻¹(I_SR), HR)
    L_c = metric(g2·g1⁻¹(I_proj), I_tgt)
    L   = L_r + α·L_c

然後 backward → Adam(θ, proj) → EMA(θ̂ ← θ) → t += 1。
EMA 混入的是這一步 Adam 更新之前的 θ：θ̂ᵗ = β·θ̂ᵗ⁻¹ + (1−β)·θᵗ⁻¹。
loss 非有限值時整步作廢，state（含 augment 亂數流）保持原樣。

α = 0 時整個一致性分支（target、投影頭、L_c）都不算，L_c 回報 0，
g2 仍照抽，亂數消耗與純監督訓練相同。
"""

import logging
import zlib
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from scripts.config import TrainConfig
from scripts.engine import Tape, Tensor, add, backward, l1_loss, loss_by_name, no_tape, scale
from scripts.errors import NumericFault, ShapeError
from scripts.models import (
    ProjectionHead,
    SRNetConfig,
    SRNetwork,
    build_projection_head,
    build_sr_network,
)
from scripts.training.augment import DihedralOp, apply_each, compose, inverse, sample_views
from scripts.training.optimizer import AdamHyper, adam_step, ema_update, zero_moments

logger = logging.getLogger(__name__)

# 具名亂數子流：改一個不影響其他
STREAM_INIT_ONLINE = 'init.online'
STREAM_INIT_PROJ = 'init.proj'
STREAM_AUGMENT = 'augment'
STREAM_PATCH = 'patch'
RUNTIME_STREAMS = (STREAM_AUGMENT, STREAM_PATCH)


def make_rng(seed: int, stream: str) -> np.random.Generator:
    """同一個 master seed 依名稱衍生出獨立的子流"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(stream.encode('utf-8'))]))


@dataclass
class StepMetrics:
    step: int
    loss_total: float
    loss_rec: float
    loss_cons: float

    def as_row(self) -> Dict:
        return {
            'step': self.step,
            'loss_total': self.loss_total,
            'loss_rec': self.loss_rec,
            'loss_cons': self.loss_cons,
        }


@dataclass
class TrainState:
    config: TrainConfig
    online: SRNetwork
    target: SRNetwork
    proj: ProjectionHead
    adam_m: 'OrderedDict[str, np.ndarray]'
    adam_v: 'OrderedDict[str, np.ndarray]'
    step: int = 0
    rngs: Dict[str, np.random.Generator] = field(default_factory=dict)

    def trainable(self) -> 'OrderedDict[str, Tensor]':
        """Adam 管理的參數：online.* 與 proj.*（永遠不含 target）"""
        out = OrderedDict()
        for name, p in self.online.named_parameters():
            out[f'online.{name}'] = p
        for name, p in self.proj.named_parameters():
            out[f'proj.{name}'] = p
        return out

    def zero_grad(self) -> None:
        self.online.zero_grad()
        self.proj.zero_grad()
        self.target.zero_grad()


def init_state(cfg: TrainConfig) -> TrainState:
    """θ 與 proj 由 seed 建立，θ̂ 為 θ 的逐位元拷貝，moments 歸零，t = 0"""
    online = build_sr_network(SRNetConfig.from_train_config(cfg), make_rng(cfg.seed, STREAM_INIT_ONLINE))
    proj = build_projection_head(cfg.proj_channels, make_rng(cfg.seed, STREAM_INIT_PROJ))
    target = online.copy(requires_grad=False)
    state = TrainState(config=cfg, online=online, target=target, proj=proj,
                       adam_m=OrderedDict(), adam_v=OrderedDict(), step=0,
                       rngs={name: make_rng(cfg.seed, name) for name in RUNTIME_STREAMS})
    state.adam_m, state.adam_v = zero_moments(state.trainable().items())
    logger.debug('init_state: online %d 參數, proj %d 參數',
                 online.num_parameters(), proj.num_parameters())
    return state


# ---------------------------------------------------------------------------
# 損失
# ---------------------------------------------------------------------------
@dataclass
class LossTerms:
    total: Tensor
    rec: Tensor
    cons: Optional[Tensor]


def compute_losses(online_fn: Callable, proj_fn: Callable, target_fn: Callable,
                   lr: np.ndarray, hr: np.ndarray,
                   g1s: Sequence[DihedralOp], g2s: Sequence[DihedralOp],
                   alpha: float, metric: str = 'L1') -> LossTerms:
    """在目前的 tape 上建 L = L_r + α·L_c。

    online_fn / proj_fn / target_fn 只要是 Tensor → Tensor 的函式即可，
    所以可以拿無參數的等變上採樣來驗證對齊鏈。
    """
    x1 = Tensor(apply_each(g1s, lr), dtype=lr.dtype)
    sr = online_fn(x1)
    inv1 = [inverse(g) for g in g1s]
    hr_t = Tensor(hr, dtype=sr.dtype)
    loss_rec = l1_loss(apply_each(inv1, sr), hr_t)
    if alpha == 0:
        return LossTerms(total=loss_rec, rec=loss_rec, cons=None)

    projected = proj_fn(sr)
    with no_tape():
        target_out = target_fn(Tensor(apply_each(g2s, lr), dtype=lr.dtype))
    target_out = target_out.detach()
    align = [compose(g2, gi) for g2, gi in zip(g2s, inv1)]
    loss_cons = loss_by_name(metric)(apply_each(align, projected), target_out)
    total = add(loss_rec, scale(loss_cons, alpha))
    return LossTerms(total=total, rec=loss_rec, cons=loss_cons)


def _check_batch(state: TrainState, lr: np.ndarray, hr: np.ndarray) -> None:
    s = state.config.scale
    if lr.ndim != 4 or hr.ndim != 4 or lr.shape[0] != hr.shape[0]:
        raise ShapeError(f'batch 形狀錯誤: LR {lr.shape}, HR {hr.shape}')
    if lr.shape[2] != lr.shape[3] or hr.shape[2] != hr.shape[3]:
        raise ShapeError(f'patch 必須是方形: LR {lr.shape[2:]}, HR {hr.shape[2:]}')
    if hr.shape[2] != s * lr.shape[2]:
        raise ShapeError(f'HR patch {hr.shape[2]} 不是 LR patch {lr.shape[2]} 的 {s} 倍')


def _finite_or_raise(terms: LossTerms, step: int) -> None:
    for name, t in (('loss_total', terms.total), ('loss_rec', terms.rec), ('loss_cons', terms.cons)):
        if t is not None and not np.isfinite(t.data).all():
            raise NumericFault(f'step {step}: {name} 非有限值')


def _gather_grads(params: Dict[str, Tensor]) -> Dict[str, Optional[np.ndarray]]:
    return OrderedDict((name, p.grad) for name, p in params.items())


def _draw_views(state: TrainState, n: int):
    """抽 g1、g2，並回傳抽之前的亂數狀態（失敗時還原用）"""
    rng = state.rngs[STREAM_AUGMENT]
    saved = rng.bit_generator.state
    g1s, g2s = sample_views(rng, n)
    return g1s, g2s, saved


def _rewind_views(state: TrainState, saved) -> None:
    state.rngs[STREAM_AUGMENT].bit_generator.state = saved


def ssc_step(state: TrainState, batch: Tuple[np.ndarray, np.ndarray]) -> Tuple[TrainState, StepMetrics]:
    cfg = state.config
    lr, hr = (np.asarray(b, dtype=np.float32) for b in batch)
    _check_batch(state, lr, hr)
    g1s, g2s, saved = _draw_views(state, lr.shape[0])

    try:
        with Tape() as tape:
            terms = compute_losses(state.online, state.proj, state.target, lr, hr,
                                   g1s, g2s, cfg.alpha, cfg.consistency_metric)
        _finite_or_raise(terms, state.step + 1)
    except NumericFault:
        _rewind_views(state, saved)
        raise
    state.zero_grad()
    backward(terms.total, tape)

    online_prev = state.online.copy(requires_grad=False)
    params = state.trainable()
    adam_step(params, _gather_grads(params), state.adam_m, state.adam_v,
              state.step + 1, AdamHyper.from_train_config(cfg))
    ema_update(state.target, online_prev, cfg.ema_beta)
    state.step += 1

    metrics = StepMetrics(
        step=state.step,
        loss_total=terms.total.item(),
        loss_rec=terms.rec.item(),
        loss_cons=terms.cons.item() if terms.cons is not None else 0.0,
    )
    return state, metrics


def supervised_step(state: TrainState, batch: Tuple[np.ndarray, np.ndarray]) -> Tuple[TrainState, StepMetrics]:
    """純監督的主幹訓練步（沒有 target、沒有投影頭），作為 α=0 的對照組"""
    cfg = state.config
    lr, hr = (np.asarray(b, dtype=np.float32) for b in batch)
    _check_batch(state, lr, hr)
    g1s, _, saved = _draw_views(state, lr.shape[0])

    try:
        with Tape() as tape:
            sr = state.online(Tensor(apply_each(g1s, lr)))
            loss = l1_loss(apply_each([inverse(g) for g in g1s], sr), Tensor(hr))
        if not np.isfinite(loss.data).all():
            raise NumericFault(f'step {state.step + 1}: loss 非有限值')
    except NumericFault:
        _rewind_views(state, saved)
        raise
    state.online.zero_grad()
    backward(loss, tape)

    params = OrderedDict((f'online.{n}', p) for n, p in state.online.named_parameters())
    adam_step(params, _gather_grads(params), state.adam_m, state.adam_v,
              state.step + 1, AdamHyper.from_train_config(cfg))
    state.step += 1
    value = loss.item()
    return state, StepMetrics(step=state.step, loss_total=value, loss_rec=value, loss_cons=0.0)


