"""
張量運算與自動微分 / Tensor Core & Autodiff

numpy 上的最小反向模式自動微分，只涵蓋 SR 網路需要的運算。
"""

from .tensor import Tensor, Tape, backward, no_tape, active_tape, as_tensor
from .ops import (
    conv2d,
    relu,
    add,
    sub,
    scale,
    elementwise,
    tensor_sum,
    pixel_shuffle,
    pixel_unshuffle,
    upsample_nearest,
    l1_loss,
    l2_loss,
    loss_by_name,
)
from .gradcheck import grad_check

__all__ = [
    'Tensor',
    'Tape',
    'backward',
    'no_tape',
    'active_tape',
    'as_tensor',
    'conv2d',
    'relu',
    'add',
    'sub',
    'scale',
    'elementwise',
    'tensor_sum',
    'pixel_shuffle',
    'pixel_unshuffle',
    'upsample_nearest',
    'l1_loss',
    'l2_loss',
    'loss_by_name',
    'grad_check',
]
