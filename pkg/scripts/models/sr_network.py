#!/usr/bin/env python3
"""
===============================================================================
EDSR-lite 超解析網路 / EDSR-lite SR Network
===============================================================================

    head conv (3→C)
      → B × [conv → ReLU → conv, 加回區塊輸入]
      → 長跳接：加回 head 輸出
      → tail conv (C→C·s²) → pixel_shuffle(s) → final conv (C→3)

沒有 BatchNorm、沒有 mean-shift，輸入輸出都在 [0,1]。
online 與 target 兩份網路形狀完全一致，參數名稱順序固定。
"""

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from scripts.config import SUPPORTED_SCALES
from scripts.engine import Tensor, add, as_tensor, pixel_shuffle, relu
from scripts.errors import ConfigError, ShapeError
from scripts.models.base import ConvNet, init_conv

KERNEL = 3


@dataclass(frozen=True)
class SRNetConfig:
    scale: int = 2
    channels: int = 16
    num_blocks: int = 2
    io_channels: int = 3

    def __post_init__(self):
        if self.scale not in SUPPORTED_SCALES:
            raise ConfigError(f'scale 必須是 {SUPPORTED_SCALES} 之一（{self.scale}）')
        if self.channels < 1:
            raise ConfigError(f'channels 必須 > 0（{self.channels}）')
        if self.num_blocks < 0:
            raise ConfigError(f'num_blocks 必須 ≥ 0（{self.num_blocks}）')
        if self.io_channels != 3:
            raise ConfigError(f'io_channels 固定為 3（{self.io_channels}）')

    @classmethod
    def from_train_config(cls, cfg) -> 'SRNetConfig':
        return cls(scale=cfg.scale, channels=cfg.channels, num_blocks=cfg.num_blocks)


def expected_parameter_count(cfg: SRNetConfig) -> int:
    """參數數量的封閉式"""
    c, s, b, io = cfg.channels, cfg.scale, cfg.num_blocks, cfg.io_channels
    k2 = KERNEL * KERNEL
    head = io * c * k2 + c
    blocks = b * 2 * (c * c * k2 + c)
    tail = c * c * s * s * k2 + c * s * s
    final = c * io * k2 + io
    return head + blocks + tail + final


class SRNetwork(ConvNet):
    """f_SR（online）或 f̂_SR（target）"""

    def __init__(self, cfg: SRNetConfig, params):
        super().__init__(params)
        self.cfg = cfg

    def forward(self, lr) -> Tensor:
        x = as_tensor(lr)
        if x.ndim != 4 or x.shape[1] != self.cfg.io_channels:
            raise ShapeError(f'forward_sr 需要 [N,3,h,w] 輸入，得到 {x.shape}')
        head = self._conv('head', x)
        h = head
        for i in range(self.cfg.num_blocks):
            r = self._conv(f'body.{i}.conv2', relu(self._conv(f'body.{i}.conv1', h)))
            h = add(h, r)
        h = add(h, head)
        t = self._conv('tail', h)
        return self._conv('final', pixel_shuffle(t, self.cfg.scale))

    __call__ = forward


def build_sr_network(cfg: SRNetConfig, rng: np.random.Generator) -> SRNetwork:
    c, s, io = cfg.channels, cfg.scale, cfg.io_channels
    layers = [('head', c, io)]
    for i in range(cfg.num_blocks):
        layers.append((f'body.{i}.conv1', c, c))
        layers.append((f'body.{i}.conv2', c, c))
    layers.append(('tail', c * s * s, c))
    layers.append(('final', io, c))

    params = OrderedDict()
    for name, cout, cin in layers:
        weight, bias = init_conv(rng, cout, cin, KERNEL)
        params[f'{name}.weight'] = Tensor(weight, requires_grad=True)
        params[f'{name}.bias'] = Tensor(bias, requires_grad=True)
    return SRNetwork(cfg, params)


def forward_sr(net: SRNetwork, lr) -> Tensor:
    return net.forward(lr)
