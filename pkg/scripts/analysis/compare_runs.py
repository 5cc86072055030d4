#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""多個訓練 run 的 metrics.csv 並排比較（α 消融、L1/L2 消融）。

    python3 scripts/main.py compare runs/alpha0/metrics.csv runs/alpha001/metrics.csv

每個 run 報：
  - 最後 200 步的 loss_total / loss_rec / loss_cons 平均
  - loss_total 的 200 步移動平均是否逐步不增（non_increasing，訓練趨勢檢查）
  - 不重疊 200 步區塊平均是否不增（blocks_non_increasing，較寬鬆，只供參考）

run 比 window 短時，window 縮成整段長度。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import pandas as pd

from scripts.errors import DatasetError

WINDOW = 200
LOSS_COLUMNS = ['loss_total', 'loss_rec', 'loss_cons']


@dataclass
class RunSummary:
    name: str
    steps: int
    final_total: float
    final_rec: float
    final_cons: float
    moving_average: List[float]
    block_means: List[float]

    @property
    def non_increasing(self) -> bool:
        return bool((pd.Series(self.moving_average).diff().dropna() <= 0).all())

    @property
    def blocks_non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.block_means, self.block_means[1:]))

    def as_row(self) -> dict:
        return {
            'run': self.name,
            'steps': self.steps,
            'loss_total': self.final_total,
            'loss_rec': self.final_rec,
            'loss_cons': self.final_cons,
            'non_increasing': self.non_increasing,
            'blocks_non_increasing': self.blocks_non_increasing,
        }


def load_metrics(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f'metrics 檔不存在: {path}')
    df = pd.read_csv(path)
    missing = [c for c in ['step'] + LOSS_COLUMNS if c not in df.columns]
    if missing:
        raise DatasetError(f'{path} 缺少欄位 {missing}')
    if df.empty:
        raise DatasetError(f'{path} 沒有任何資料列')
    return df.sort_values('step').reset_index(drop=True)


def moving_average(series: pd.Series, window: int = WINDOW) -> List[float]:
    """完整 window 的移動平均（第 window 步起，每步一個值）"""
    window = max(1, min(window, len(series)))
    return [float(v) for v in series.rolling(window).mean().dropna()]


def block_means(series: pd.Series, window: int = WINDOW) -> List[float]:
    """不重疊的 window 步區塊平均；不足一個區塊時回傳整段平均"""
    n = len(series) // window
    if n == 0:
        return [float(series.mean())]
    blocks = series.iloc[:n * window].to_numpy().reshape(n, window)
    return [float(b.mean()) for b in blocks]


def summarize(df: pd.DataFrame, name: str, window: int = WINDOW) -> RunSummary:
    tail = df.tail(window)
    return RunSummary(
        name=name,
        steps=int(df['step'].iloc[-1]),
        final_total=float(tail['loss_total'].mean()),
        final_rec=float(tail['loss_rec'].mean()),
        final_cons=float(tail['loss_cons'].mean()),
        moving_average=moving_average(df['loss_total'], window),
        block_means=block_means(df['loss_total'], window),
    )


def compare_runs(paths: Sequence, window: int = WINDOW) -> List[RunSummary]:
    if not paths:
        raise DatasetError('至少需要一個 metrics.csv')
    summaries = []
    for path in paths:
        path = Path(path)
        label = path.parent.name or path.stem
        summaries.append(summarize(load_metrics(path), label, window))
    return summaries


def to_frame(summaries: Sequence[RunSummary]) -> pd.DataFrame:
    return pd.DataFrame([s.as_row() for s in summaries])
