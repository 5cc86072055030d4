#!/usr/bin/env python3
"""
===============================================================================
投影頭 / Projection Head
===============================================================================
三層 3×3 卷積（3→Cp→Cp→3），前兩層後接 ReLU，形狀不變。
只接在 online 分支，讓兩個分支不對稱。

初始化與主幹相同（均勻分布）。
"""

from collections import OrderedDict

import numpy as np

from scripts.engine import Tensor, as_tensor, relu
from scripts.errors import ShapeError
from scripts.models.base import ConvNet, init_conv

IO_CHANNELS = 3
DEFAULT_WIDTH = 32


class ProjectionHead(ConvNet):
    def __init__(self, params, channels: int):
        super().__init__(params)
        self.channels = channels

    def forward(self, sr) -> Tensor:
        x = as_tensor(sr)
        if x.ndim != 4 or x.shape[1] != IO_CHANNELS:
            raise ShapeError(f'forward_proj 需要 [N,3,H,W] 輸入，得到 {x.shape}')
        h = relu(self._conv('conv1', x))
        h = relu(self._conv('conv2', h))
        return self._conv('conv3', h)

    __call__ = forward


def build_projection_head(channels: int, rng: np.random.Generator) -> ProjectionHead:
    if channels < 1:
        raise ShapeError(f'投影頭寬度必須 > 0（{channels}）')
    params = OrderedDict()
    for name, cout, cin in (('conv1', channels, IO_CHANNELS),
                            ('conv2', channels, channels),
                            ('conv3', IO_CHANNELS, channels)):
        weight, bias = init_conv(rng, cout, cin)
        params[f'{name}.weight'] = Tensor(weight, requires_grad=True)
        params[f'{name}.bias'] = Tensor(bias, requires_grad=True)
    return ProjectionHead(params, channels)


def forward_proj(head: ProjectionHead, sr) -> Tensor:
    return head.forward(sr)
