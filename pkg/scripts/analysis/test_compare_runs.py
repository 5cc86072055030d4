#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""run 比較：移動平均趨勢、區塊平均與 metrics.csv 讀取。"""

import os
import sys

import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.analysis.compare_runs import (  # noqa: E402
    block_means, compare_runs, load_metrics, moving_average, summarize, to_frame,
)
from scripts.errors import DatasetError  # noqa: E402


def frame(totals):
    return pd.DataFrame({
        'step': range(1, len(totals) + 1),
        'loss_total': totals,
        'loss_rec': totals,
        'loss_cons': [0.0] * len(totals),
    })


def test_moving_average_values():
    assert moving_average(pd.Series([4.0, 2.0, 6.0, 0.0]), window=2) == [3.0, 4.0, 3.0]


def test_uptick_inside_blocks_is_caught():
    # 區塊平均 8 → 4 → 2.25 一路下降，但移動平均在第 9 步回升
    totals = [8.0] * 4 + [4.0] * 4 + [9.0, 0.0, 0.0, 0.0]
    summary = summarize(frame(totals), 'x', window=4)
    assert block_means(pd.Series(totals), window=4) == [8.0, 4.0, 2.25]
    assert summary.blocks_non_increasing
    assert not summary.non_increasing
    assert summary.moving_average[:6] == [8.0, 7.0, 6.0, 5.0, 4.0, 5.25]


def test_decreasing_run_passes():
    summary = summarize(frame([float(v) for v in range(40, 0, -1)]), 'down', window=8)
    assert summary.non_increasing and summary.blocks_non_increasing
    assert summary.steps == 40
    assert summary.final_total == pytest.approx(4.5)


def test_short_run_shrinks_window():
    summary = summarize(frame([3.0, 2.0, 1.0]), 'short', window=200)
    assert summary.moving_average == [2.0]
    assert summary.non_increasing


def test_compare_and_frame(tmp_path):
    for name, totals in (('a', [2.0, 1.0, 1.0, 0.5]), ('b', [1.0, 2.0, 1.0, 3.0])):
        (tmp_path / name).mkdir()
        frame(totals).to_csv(tmp_path / name / 'metrics.csv', index=False)
    summaries = compare_runs([tmp_path / 'a' / 'metrics.csv', tmp_path / 'b' / 'metrics.csv'], window=2)
    df = to_frame(summaries)
    assert list(df['run']) == ['a', 'b']
    assert list(df['non_increasing']) == [True, False]
    assert 'blocks_non_increasing' in df.columns


def test_load_metrics_errors(tmp_path):
    with pytest.raises(DatasetError):
        load_metrics(tmp_path / 'missing.csv')
    bad = tmp_path / 'bad.csv'
    pd.DataFrame({'step': [1], 'loss_total': [1.0]}).to_csv(bad, index=False)
    with pytest.raises(DatasetError, match='loss_rec'):
        load_metrics(bad)
    with pytest.raises(DatasetError):
        compare_runs([])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
