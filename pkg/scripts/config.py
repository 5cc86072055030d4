#!/usr/bin/env python3
"""
===============================================================================
配置文件 / Configuration
===============================================================================

兩層設定：
  Config       專案層級路徑與環境變數（.env 可覆寫）
  RunConfig    單次訓練的超參數，從 `key = value` 純文字檔讀入

設定檔格式：
    # 註解
    alpha = 0.01
    consistency_metric = L1

未知的 key 一律報錯。
"""

import os
from dataclasses import dataclass, fields, asdict
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv

from scripts.errors import ConfigError

load_dotenv()


class Config:
    """專案配置"""

    # 路徑設定
    # scripts/config.py -> 專案根目錄是 parent.parent
    BASE_DIR = Path(__file__).parent.parent
    DATA_ROOT = Path(os.environ.get('SSC_DATA_ROOT', BASE_DIR / 'data' / 'synth'))
    OUTPUT_DIR = Path(os.environ.get('SSC_OUTPUT_DIR', BASE_DIR / 'runs'))
    LOG_LEVEL = os.environ.get('SSC_LOG_LEVEL', 'INFO')

    # 輸出檔名
    METRICS_FILENAME = 'metrics.csv'
    EVAL_LOG_FILENAME = 'eval_log.csv'
    RESOLVED_CONFIG_FILENAME = 'resolved_config.txt'
    FINAL_CHECKPOINT = 'final.ckpt'
    LATEST_CHECKPOINT = 'latest.ckpt'

    # 資料集目錄慣例: <root>/HR/*.png, <root>/LRx<s>/*.png
    HR_DIRNAME = 'HR'

    @staticmethod
    def lr_dirname(scale: int) -> str:
        return f'LRx{scale}'

    @classmethod
    def print_paths(cls):
        """印出路徑設定（調試用）"""
        print(f"BASE_DIR: {cls.BASE_DIR}")
        print(f"DATA_ROOT: {cls.DATA_ROOT}")
        print(f"OUTPUT_DIR: {cls.OUTPUT_DIR}")
        print(f"DATA_ROOT exists: {cls.DATA_ROOT.exists()}")
        print(f"LOG_LEVEL: {cls.LOG_LEVEL}")


CONSISTENCY_METRICS = ('L1', 'L2')
SUPPORTED_SCALES = (1, 2, 3, 4)


@dataclass(frozen=True)
class TrainConfig:
    """訓練超參數與網路形狀。預設值是桌機規模（batch 4、LR patch 16）。"""
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 4
    lr_patch_size: int = 16
    alpha: float = 0.01
    ema_beta: float = 0.999
    consistency_metric: str = 'L1'
    total_steps: int = 2000
    seed: int = 0
    scale: int = 2
    channels: int = 16
    num_blocks: int = 2
    proj_channels: int = 32

    def __post_init__(self):
        object.__setattr__(self, 'consistency_metric', str(self.consistency_metric).upper())
        errors = self.validate()
        if errors:
            raise ConfigError('; '.join(errors))

    def validate(self):
        """回傳錯誤訊息列表（空 = 合法）"""
        errors = []
        if not self.learning_rate > 0:
            errors.append(f'learning_rate 必須 > 0（{self.learning_rate}）')
        for name in ('adam_beta1', 'adam_beta2'):
            v = getattr(self, name)
            if not 0 <= v < 1:
                errors.append(f'{name} 必須在 [0, 1)（{v}）')
        if not self.adam_epsilon > 0:
            errors.append(f'adam_epsilon 必須 > 0（{self.adam_epsilon}）')
        if self.batch_size < 1:
            errors.append(f'batch_size 必須 ≥ 1（{self.batch_size}）')
        if self.lr_patch_size < 1:
            errors.append(f'lr_patch_size 必須 ≥ 1（{self.lr_patch_size}）')
        if not self.alpha >= 0:
            errors.append(f'alpha 必須 ≥ 0（{self.alpha}）')
        if not 0 <= self.ema_beta <= 1:
            errors.append(f'ema_beta 必須在 [0, 1]（{self.ema_beta}）')
        if self.consistency_metric not in CONSISTENCY_METRICS:
            errors.append(f'consistency_metric 必須是 {CONSISTENCY_METRICS} 之一（{self.consistency_metric}）')
        if self.total_steps < 0:
            errors.append(f'total_steps 必須 ≥ 0（{self.total_steps}）')
        if self.scale not in SUPPORTED_SCALES:
            errors.append(f'scale 必須是 {SUPPORTED_SCALES} 之一（{self.scale}）')
        if self.channels < 1:
            errors.append(f'channels 必須 > 0（{self.channels}）')
        if self.num_blocks < 0:
            errors.append(f'num_blocks 必須 ≥ 0（{self.num_blocks}）')
        if self.proj_channels < 1:
            errors.append(f'proj_channels 必須 > 0（{self.proj_channels}）')
        return errors

    def to_dict(self) -> Dict:
        return asdict(self)

    def to_text(self) -> str:
        """完整展開（含預設值）的設定，可直接再讀回來重現同一次訓練"""
        lines = [f'{f.name} = {_format_value(getattr(self, f.name))}' for f in fields(self)]
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str, path: Optional[str] = None):
        values = parse_key_values(text, cls, path=path)
        try:
            return cls(**values)
        except ConfigError as e:
            raise ConfigError(str(e), path=path) from None


@dataclass(frozen=True)
class RunConfig(TrainConfig):
    """TrainConfig 加上資料與輸出位置。空字串的 log_path 代表 <output_dir>/metrics.csv。"""
    data_root: str = str(Config.DATA_ROOT)
    output_dir: str = str(Config.OUTPUT_DIR / 'default')
    checkpoint_every: int = 500
    eval_every: int = 0
    holdout: int = 0
    log_path: str = ''

    def validate(self):
        errors = super().validate()
        if self.checkpoint_every < 0:
            errors.append(f'checkpoint_every 必須 ≥ 0（{self.checkpoint_every}）')
        if self.eval_every < 0:
            errors.append(f'eval_every 必須 ≥ 0（{self.eval_every}）')
        if self.holdout < 0:
            errors.append(f'holdout 必須 ≥ 0（{self.holdout}）')
        return errors

    @property
    def metrics_path(self) -> Path:
        if self.log_path:
            return Path(self.log_path)
        return Path(self.output_dir) / Config.METRICS_FILENAME

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in self.to_dict().items() if k in names})


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(raw: str, ftype, key: str, lineno: int, path):
    type_name = ftype if isinstance(ftype, str) else getattr(ftype, '__name__', str(ftype))
    try:
        if type_name == 'int':
            return int(raw)
        if type_name == 'float':
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f'{key} 的值 {raw!r} 不是合法的 {type_name}', line=lineno, path=path) from None


def parse_key_values(text: str, cls=RunConfig, path: Optional[str] = None) -> Dict:
    """解析 `key = value`，依 dataclass 欄位型別轉型"""
    known = {f.name: f.type for f in fields(cls)}
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'缺少 "=": {raw_line.strip()!r}', line=lineno, path=path)
        key, raw = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError('key 是空的', line=lineno, path=path)
        if key not in known:
            raise ConfigError(f'未知的設定 {key!r}', line=lineno, path=path)
        if key in values:
            raise ConfigError(f'重複的設定 {key!r}', line=lineno, path=path)
        values[key] = _coerce(raw, known[key], key, lineno, path)
    return values


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError('設定檔不存在', path=str(path))
    text = path.read_text(encoding='utf-8')
    return RunConfig.from_text(text, path=str(path))
