#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""資料夾評測、bicubic 基準線、self-ensemble 與投影偏離圖。"""

import math
import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.analysis.evaluate import (  # noqa: E402
    MEAN_ROW, EvalReport, bicubic_upscaler, divergence_map, evaluate_dir, evaluate_pairs,
    network_upscaler, select_weights, self_ensemble, super_resolve,
)
from scripts.config import RunConfig  # noqa: E402
from scripts.errors import DatasetError  # noqa: E402
from scripts.imaging import synthesize_dataset  # noqa: E402
from scripts.training.checkpoint import save_checkpoint  # noqa: E402
from scripts.training.trainer import init_state  # noqa: E402

CFG = RunConfig(channels=4, num_blocks=1, proj_channels=4, scale=2, lr_patch_size=6, batch_size=2)


@pytest.fixture(scope='module')
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp('synth')
    synthesize_dataset(root, count=3, size=32, scale=2, seed=1, show_progress=False)
    return root


@pytest.fixture(scope='module')
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp('ckpt') / 'init.ckpt'
    save_checkpoint(init_state(CFG), path)
    return path


def test_report_csv_layout(tmp_path):
    report = EvalReport(shave=2)
    report.add('a', 30.0, 0.9)
    report.add('b', 32.0, 0.8)
    assert report.mean_psnr == 31.0
    df = pd.read_csv(report.to_csv(tmp_path / 'r' / 'report.csv'))
    assert list(df.columns) == ['name', 'psnr_db', 'ssim']
    assert list(df['name']) == ['a', 'b', MEAN_ROW]
    assert df['ssim'].iloc[-1] == pytest.approx(0.85)


def test_hr_as_sr_scores_perfectly():
    rng = np.random.default_rng(0)
    pairs = []
    for _ in range(2):
        hr = rng.random((3, 24, 24)).astype(np.float32)
        pairs.append((hr[:, ::2, ::2], hr))

    def oracle(lr):
        return next(hr for low, hr in pairs if low is lr)

    report = evaluate_pairs(oracle, pairs, ['x', 'y'], shave=2)
    assert all(p == math.inf for p in report.psnr)
    assert all(s == 1.0 for s in report.ssim)


def test_bicubic_baseline_is_deterministic(dataset, tmp_path):
    a = evaluate_dir(None, dataset / 'LRx2', dataset / 'HR', report_path=tmp_path / 'a.csv')
    b = evaluate_dir(None, dataset / 'LRx2', dataset / 'HR', report_path=tmp_path / 'b.csv')
    assert a.weights == 'bicubic' and a.shave == 2
    assert len(a) == 3 and a.names == ['tex_000', 'tex_001', 'tex_002']
    assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()
    assert 15.0 < a.mean_psnr < 60.0
    assert 0.0 < a.mean_ssim <= 1.0


def test_explicit_shave(dataset):
    report = evaluate_dir(None, dataset / 'LRx2', dataset / 'HR', shave=4)
    assert report.shave == 4


def test_empty_dirs_raise(tmp_path):
    (tmp_path / 'LR').mkdir()
    (tmp_path / 'HR').mkdir()
    with pytest.raises(DatasetError):
        evaluate_dir(None, tmp_path / 'LR', tmp_path / 'HR')
    with pytest.raises(DatasetError):
        evaluate_pairs(lambda x: x, [], [], shave=0)


def test_online_and_target_agree_at_step_zero(dataset, checkpoint):
    online = evaluate_dir(checkpoint, dataset / 'LRx2', dataset / 'HR', weights='online')
    target = evaluate_dir(checkpoint, dataset / 'LRx2', dataset / 'HR', weights='target')
    assert online.psnr == target.psnr
    assert online.ssim == target.ssim


def test_requantize_changes_scores(dataset, checkpoint):
    raw = evaluate_dir(checkpoint, dataset / 'LRx2', dataset / 'HR')
    quant = evaluate_dir(checkpoint, dataset / 'LRx2', dataset / 'HR', requantize=True)
    assert raw.psnr != quant.psnr


def test_invalid_weights():
    with pytest.raises(ValueError):
        select_weights(init_state(CFG), 'ema')


def test_self_ensemble_shape():
    state = init_state(CFG)
    img = np.random.default_rng(2).random((3, 6, 9)).astype(np.float32)
    out = self_ensemble(state.online, img)
    assert out.shape == (3, 12, 18) and out.dtype == np.float32
    single = network_upscaler(state.online)(img)
    np.testing.assert_array_equal(single, super_resolve(state.online, img))
    assert not np.array_equal(out, single)


def test_bicubic_upscaler_shape():
    out = bicubic_upscaler(3)(np.zeros((3, 4, 5), dtype=np.float32))
    assert out.shape == (3, 12, 15)


def test_divergence_map():
    state = init_state(CFG)
    lr = np.random.default_rng(3).random((3, 8, 8)).astype(np.float32)
    img, p, s = divergence_map(state.online, state.proj, lr)
    assert img.shape == (16, 16) and img.dtype == np.uint8
    assert img.max() == 255
    assert np.isfinite(p)
    assert -1.0 <= s <= 1.0

    tiny = np.random.default_rng(4).random((3, 4, 4)).astype(np.float32)
    _, _, s_small = divergence_map(state.online, state.proj, tiny)
    assert math.isnan(s_small)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
