"""
SR 模型 / SR Models

online / target 主幹（EDSR-lite）與投影頭。
"""

from .base import ConvNet, init_conv
from .sr_network import (
    SRNetConfig,
    SRNetwork,
    build_sr_network,
    forward_sr,
    expected_parameter_count,
)
from .projection_head import ProjectionHead, build_projection_head, forward_proj

__all__ = [
    'ConvNet',
    'init_conv',
    'SRNetConfig',
    'SRNetwork',
    'build_sr_network',
    'forward_sr',
    'expected_parameter_count',
    'ProjectionHead',
    'build_projection_head',
    'forward_proj',
]
