#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""品質關卡：訓練前先確認數學零件都是對的。

每個檢查印一行 ✅/❌，最後一行總結，有任何失敗就 exit 1。

    python3 scripts/main.py selfcheck
    python3 scripts/main.py selfcheck --only gradcheck dihedral

檢查項目：
    gradcheck      每個層運算 × 20 個 seed，float64 中央差分
    ssc_gradcheck  完整 SSC 損失（C=4、B=1、6×6 patch、投影頭寬 4）對所有參數
    dihedral       8 個反元素 + 512 組合成三元組，作用在 7×7 非對稱影像上逐位元比對
    ema            β=0 / β=1 逐位元、β=0.999 與純量公式差距 ≤ 1 ulp、固定 θ 時的收縮率
    equivariance   無參數的最近鄰上採樣 + 恆等投影頭，64 組 (g1, g2) 的 L_c 必須恰為 0
    adam           5 步純量遞迴、第一步位移 lr/(1+ε)、零梯度不動
    alpha_zero     α=0 的 SSC 與純監督訓練步參數軌跡逐位元相同
"""

import os
import sys
import time
from collections import OrderedDict
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.config import TrainConfig  # noqa: E402
from scripts.engine import (  # noqa: E402
    Tensor, conv2d, elementwise, grad_check, l1_loss, l2_loss, pixel_shuffle, relu,
    upsample_nearest,
)
from scripts.models import ConvNet, ProjectionHead, SRNetConfig, SRNetwork  # noqa: E402
from scripts.training.augment import (  # noqa: E402
    ELEMENTS, apply, apply_each, compose, inverse,
)
from scripts.training.optimizer import AdamHyper, adam_step, ema_update, zero_moments  # noqa: E402
from scripts.training.trainer import (  # noqa: E402
    compute_losses, init_state, ssc_step, supervised_step,
)

GRAD_TOL = 1e-5
DEFAULT_SEEDS = 20


class CheckReport:
    """check(name, ok) 一行一個結果；failures 收集失敗的名稱"""

    def __init__(self, verbose: bool = True):
        self.verbose = verbose
        self.passed: List[str] = []
        self.failures: List[str] = []

    def check(self, name: str, ok: bool, detail: str = '') -> bool:
        ok = bool(ok)
        (self.passed if ok else self.failures).append(name)
        if self.verbose:
            line = f"  {'✅' if ok else '❌'} {name}"
            if detail:
                line += f"\n     {detail}"
            print(line)
        return ok

    @property
    def ok(self) -> bool:
        return not self.failures


# ---------------------------------------------------------------------------
# 梯度
# ---------------------------------------------------------------------------
def _away_from_zero(rng, shape, low=0.1):
    return rng.uniform(low, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _layer_cases(rng) -> Dict[str, tuple]:
    """名稱 → (op, inputs)。折點附近的值先推開，避免差分跨過折點。"""
    a = rng.standard_normal((2, 3, 4, 4))
    ops = [ELEMENTS[int(i)] for i in rng.integers(0, 8, size=2)]
    return OrderedDict([
        ('conv2d', (lambda x, w, b: conv2d(x, w, b, padding=1),
                    [rng.standard_normal((2, 3, 5, 5)), rng.standard_normal((4, 3, 3, 3)),
                     rng.standard_normal(4)])),
        ('conv2d_valid', (lambda x, w, b: conv2d(x, w, b, padding=0),
                          [rng.standard_normal((1, 2, 5, 4)), rng.standard_normal((3, 2, 3, 3)),
                           rng.standard_normal(3)])),
        ('relu', (relu, [_away_from_zero(rng, (2, 3, 4, 4))])),
        ('add', (lambda x, y: elementwise('add', x, y), [a, rng.standard_normal(a.shape)])),
        ('sub', (lambda x, y: elementwise('sub', x, y), [a, rng.standard_normal(a.shape)])),
        ('scale_by_constant', (lambda x: elementwise('scale_by_constant', x, 0.37), [a])),
        ('pixel_shuffle', (lambda x: pixel_shuffle(x, 2), [rng.standard_normal((1, 8, 3, 3))])),
        ('upsample_nearest', (lambda x: upsample_nearest(x, 2), [rng.standard_normal((1, 2, 3, 3))])),
        ('dihedral', (lambda x: apply_each(ops, x), [rng.standard_normal((2, 3, 4, 4))])),
        ('l1_loss', (l1_loss, [a, a + _away_from_zero(rng, a.shape)])),
        ('l2_loss', (l2_loss, [a, rng.standard_normal(a.shape)])),
    ])


def check_gradients(report: CheckReport, seeds: int = DEFAULT_SEEDS) -> None:
    worst: Dict[str, float] = OrderedDict()
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        for name, (op, inputs) in _layer_cases(rng).items():
            err = grad_check(op, inputs, seed=seed)
            worst[name] = max(worst.get(name, 0.0), err)
    for name, err in worst.items():
        report.check(f'gradcheck {name} ({seeds} seeds)', err < GRAD_TOL, f'max err {err:.2e}')


def _tiny_config(**overrides) -> TrainConfig:
    base = dict(channels=4, num_blocks=1, proj_channels=4, scale=2, lr_patch_size=6,
                batch_size=2, seed=0, alpha=0.01)
    base.update(overrides)
    return TrainConfig(**base)


def check_ssc_gradient(report: CheckReport, seeds: int = DEFAULT_SEEDS,
                       max_elements: int = 3) -> None:
    """整條 L = L_r + α·L_c 對 online 與投影頭參數的梯度"""
    worst = 0.0
    for seed in range(seeds):
        metric = 'L1' if seed % 2 == 0 else 'L2'
        cfg = _tiny_config(seed=seed, consistency_metric=metric)
        state = init_state(cfg)
        rng = np.random.default_rng(1000 + seed)
        lr = rng.random((1, 3, 6, 6))
        hr = rng.random((1, 3, 12, 12))
        g1s = [ELEMENTS[int(rng.integers(0, 8))]]
        g2s = [ELEMENTS[int(rng.integers(0, 8))]]
        # target 與 online 錯開，L_c 才不會退化
        target = state.target.astype(np.float64)
        for p in target.parameters():
            p.data = p.data + 0.05 * rng.standard_normal(p.shape)

        net_cfg = SRNetConfig.from_train_config(cfg)
        online_names = state.online.names()
        proj_names = state.proj.names()
        inputs = [p.data.astype(np.float64) for p in state.online.parameters()]
        inputs += [p.data.astype(np.float64) for p in state.proj.parameters()]

        def op(*tensors):
            online = SRNetwork(net_cfg, OrderedDict(zip(online_names, tensors[:len(online_names)])))
            proj = ProjectionHead(OrderedDict(zip(proj_names, tensors[len(online_names):])),
                                  cfg.proj_channels)
            return compute_losses(online, proj, target, lr, hr, g1s, g2s,
                                  alpha=1.0, metric=metric).total

        err = grad_check(op, inputs, seed=seed, max_elements=max_elements, kink_tol=1e-6)
        worst = max(worst, err)
    report.check(f'gradcheck ssc_loss ({seeds} seeds)', worst < GRAD_TOL, f'max err {worst:.2e}')


# ---------------------------------------------------------------------------
# 二面體群
# ---------------------------------------------------------------------------
def check_dihedral(report: CheckReport) -> None:
    x = np.random.default_rng(7).standard_normal((7, 7)).astype(np.float32)

    images = [apply(g, x) for g in ELEMENTS]
    distinct = len({img.tobytes() for img in images})
    report.check('dihedral 8 個元素作用各不相同', distinct == 8, f'distinct={distinct}')

    # 逆時針四分之一圈: out[i][j] = in[j][W−1−i]
    quarter = apply(ELEMENTS[2], x)
    expect = np.array([[x[j, 6 - i] for j in range(7)] for i in range(7)], dtype=np.float32)
    report.check('dihedral 旋轉慣例 out[i][j] = in[j][W−1−i]', np.array_equal(quarter, expect))

    bad_inverse = [str(g) for g in ELEMENTS
                   if not (np.array_equal(apply(inverse(g), apply(g, x)), x)
                           and np.array_equal(apply(g, apply(inverse(g), x)), x))]
    report.check('dihedral 8 個反元素', not bad_inverse, f'失敗: {bad_inverse}' if bad_inverse else '')

    bad_compose = 0
    for g1 in ELEMENTS:
        for g2 in ELEMENTS:
            for g3 in ELEMENTS:
                direct = apply(g3, apply(g2, apply(g1, x)))
                left = apply(compose(compose(g3, g2), g1), x)
                right = apply(compose(g3, compose(g2, g1)), x)
                if not (np.array_equal(direct, left) and np.array_equal(direct, right)):
                    bad_compose += 1
    report.check('dihedral 512 組合成三元組', bad_compose == 0, f'失敗 {bad_compose} 組')


# ---------------------------------------------------------------------------
# EMA
# ---------------------------------------------------------------------------
def _net(values: Dict[str, np.ndarray]) -> ConvNet:
    return ConvNet(OrderedDict((k, Tensor(np.asarray(v, dtype=np.float32))) for k, v in values.items()))


def check_ema(report: CheckReport) -> None:
    rng = np.random.default_rng(3)
    theta = {'w': rng.standard_normal((4, 5)), 'b': rng.standard_normal(4)}
    theta_hat = {'w': rng.standard_normal((4, 5)), 'b': rng.standard_normal(4)}

    online = _net(theta)
    target = ema_update(_net(theta_hat), online, 0.0)
    report.check('ema β=0 → θ̂ = θ（逐位元）',
                 all(np.array_equal(target[k].data, online[k].data) for k in theta))

    before = _net(theta_hat)
    target = ema_update(_net(theta_hat), online, 1.0)
    report.check('ema β=1 → θ̂ 不變（逐位元）',
                 all(np.array_equal(target[k].data, before[k].data) for k in theta))

    beta = 0.999
    target = ema_update(_net(theta_hat), online, beta)
    within = True
    for k in theta:
        th = before[k].data.astype(np.float64)
        t = online[k].data.astype(np.float64)
        oracle = (beta * th + (1 - beta) * t).astype(np.float32)
        within &= bool(np.all(np.abs(target[k].data - oracle) <= np.spacing(np.abs(oracle))))
    report.check('ema β=0.999 與純量公式差距 ≤ 1 ulp', within)

    scalar = ema_update(_net({'p': [2.0]}), _net({'p': [1.0]}), beta)
    report.check('ema θ̂=2, θ=1, β=0.999 → 1.999', abs(float(scalar['p'].data[0]) - 1.999) < 1e-6,
                 f'got {float(scalar["p"].data[0])!r}')

    # θ 固定時 ‖θ̂ − θ‖∞ 每步乘上 β
    beta = 0.9
    target = _net(theta_hat)
    gaps = []
    for _ in range(5):
        gaps.append(max(float(np.max(np.abs(target[k].data.astype(np.float64) - online[k].data)))
                        for k in theta))
        target = ema_update(target, online, beta)
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    report.check('ema 固定 θ 時每步收縮 β 倍', all(abs(r - beta) < 1e-4 for r in ratios),
                 f'ratios={[round(r, 6) for r in ratios]}')


# ---------------------------------------------------------------------------
# 對齊鏈
# ---------------------------------------------------------------------------
def check_equivariance(report: CheckReport) -> None:
    rng = np.random.default_rng(11)
    lr = rng.random((1, 3, 6, 6)).astype(np.float32)
    hr = rng.random((1, 3, 12, 12)).astype(np.float32)

    def upsampler(x):
        return upsample_nearest(x, 2)

    nonzero = []
    for g1 in ELEMENTS:
        for g2 in ELEMENTS:
            terms = compute_losses(upsampler, lambda t: t, upsampler, lr, hr, [g1], [g2],
                                   alpha=1.0, metric='L1')
            if terms.cons.item() != 0.0:
                nonzero.append(f'({g1}, {g2})')
    report.check('equivariance 64 組 (g1, g2) 的 L_c = 0', not nonzero,
                 f'非零: {nonzero[:4]}' if nonzero else '')


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------
def adam_scalar_oracle(g: float, steps: int, hyper: AdamHyper) -> List[float]:
    """float64 的純量 Adam 遞迴，回傳每步之後的 w"""
    w, m, v, out = 0.0, 0.0, 0.0, []
    for t in range(1, steps + 1):
        m = hyper.beta1 * m + (1 - hyper.beta1) * g
        v = hyper.beta2 * v + (1 - hyper.beta2) * g * g
        m_hat = m / (1 - hyper.beta1 ** t)
        v_hat = v / (1 - hyper.beta2 ** t)
        w = w - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
        out.append(w)
    return out


def check_adam(report: CheckReport) -> None:
    hyper = AdamHyper()
    params = OrderedDict(w=Tensor(np.zeros(1, dtype=np.float32), requires_grad=True))
    m, v = zero_moments(params.items())
    got = []
    for t in range(1, 6):
        adam_step(params, {'w': np.ones(1, dtype=np.float32)}, m, v, t, hyper)
        got.append(float(params['w'].data[0]))
    oracle = adam_scalar_oracle(1.0, 5, hyper)
    rel = max(abs(a - b) / abs(b) for a, b in zip(got, oracle))
    report.check('adam 5 步純量遞迴（g=1）', rel < 1e-6, f'max rel err {rel:.2e}')

    first = -hyper.lr / (1 + hyper.eps)
    report.check('adam 第一步位移 lr/(1+ε)', abs(got[0] - first) <= 1e-10,
                 f'got {got[0]!r} want {first!r}')

    params = OrderedDict(w=Tensor(np.full(3, 0.5, dtype=np.float32), requires_grad=True))
    m, v = zero_moments(params.items())
    adam_step(params, {'w': np.zeros(3, dtype=np.float32)}, m, v, 1, hyper)
    report.check('adam 零梯度參數不動', np.array_equal(params['w'].data, np.full(3, 0.5, dtype=np.float32)))


# ---------------------------------------------------------------------------
# α = 0
# ---------------------------------------------------------------------------
def check_alpha_zero(report: CheckReport, steps: int = 5) -> None:
    cfg = _tiny_config(alpha=0.0)
    ssc, sup = init_state(cfg), init_state(cfg)
    rng = np.random.default_rng(5)
    same_metrics = True
    for _ in range(steps):
        batch = (rng.random((2, 3, 6, 6), dtype=np.float32), rng.random((2, 3, 12, 12), dtype=np.float32))
        ssc, m1 = ssc_step(ssc, batch)
        sup, m2 = supervised_step(sup, batch)
        same_metrics &= m1.as_row() == m2.as_row()
    same_params = all(np.array_equal(a.data, b.data)
                      for a, b in zip(ssc.online.parameters(), sup.online.parameters()))
    report.check(f'alpha_zero {steps} 步與純監督逐位元相同', same_params and same_metrics)


CHECKS: Dict[str, Callable[[CheckReport], None]] = OrderedDict([
    ('gradcheck', check_gradients),
    ('ssc_gradcheck', check_ssc_gradient),
    ('dihedral', check_dihedral),
    ('ema', check_ema),
    ('equivariance', check_equivariance),
    ('adam', check_adam),
    ('alpha_zero', check_alpha_zero),
])


def run_selfcheck(only: Optional[Sequence[str]] = None, verbose: bool = True) -> CheckReport:
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f'未知的檢查 {unknown}（可用 {list(CHECKS)}）')
    report = CheckReport(verbose=verbose)
    for name in names:
        if verbose:
            print(f'[SelfCheck] {name}')
        start = time.perf_counter()
        try:
            CHECKS[name](report)
        except Exception as e:
            report.check(f'{name} 執行失敗', False, f'{type(e).__name__}: {e}')
        if verbose:
            print(f'     ({time.perf_counter() - start:.1f}s)')
    if verbose:
        total = len(report.passed) + len(report.failures)
        if report.ok:
            print(f'\n[SelfCheck] ✅ 全部通過 {total} 項')
        else:
            print(f'\n[SelfCheck] ❌ {len(report.failures)}/{total} 項失敗: {report.failures}')
    return report


if __name__ == '__main__':
    sys.exit(0 if run_selfcheck(sys.argv[1:] or None).ok else 1)
