"""
SSC 訓練 / Self-Supervised Consistency Training

二面體增強、Adam / EMA、訓練步與 checkpoint。
訓練迴圈在 scripts.training.loop（會用到 scripts.analysis 的評測）。
"""

from .augment import DihedralOp, ELEMENTS, IDENTITY, apply, apply_each, inverse, compose, sample
from .optimizer import AdamHyper, adam_step, ema_update
from .trainer import TrainState, StepMetrics, init_state, ssc_step, supervised_step
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    'DihedralOp',
    'ELEMENTS',
    'IDENTITY',
    'apply',
    'apply_each',
    'inverse',
    'compose',
    'sample',
    'AdamHyper',
    'adam_step',
    'ema_update',
    'TrainState',
    'StepMetrics',
    'init_state',
    'ssc_step',
    'supervised_step',
    'save_checkpoint',
    'load_checkpoint',
]
