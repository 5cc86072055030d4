#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""命令列端到端：退出碼、輸出檔與錯誤訊息。"""

import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.config import Config  # noqa: E402
from scripts.engine import ops  # noqa: E402
from scripts.imaging import load_png  # noqa: E402
from scripts.main import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, main  # noqa: E402


def write_config(path, data_root, out_dir, **extra):
    lines = {
        'data_root': data_root, 'output_dir': out_dir, 'channels': 4, 'num_blocks': 1,
        'proj_channels': 4, 'lr_patch_size': 6, 'batch_size': 2, 'total_steps': 4,
        'checkpoint_every': 2, 'alpha': 0.01,
    }
    lines.update(extra)
    path.write_text('# cli test\n' + ''.join(f'{k} = {v}\n' for k, v in lines.items()),
                    encoding='utf-8')
    return path


def test_selfcheck_subset_passes(capsys):
    assert main(['selfcheck', '--only', 'dihedral', 'adam', 'ema']) == EXIT_OK
    out = capsys.readouterr().out
    assert '✅' in out and '❌' not in out


def test_show_paths(capsys):
    assert main(['--show-paths', 'selfcheck', '--only', 'ema']) == EXIT_OK
    out = capsys.readouterr().out
    assert f'DATA_ROOT: {Config.DATA_ROOT}' in out
    assert 'OUTPUT_DIR:' in out


def test_selfcheck_catches_broken_conv_backward(monkeypatch, capsys):
    correct = ops._conv2d_backward

    def wrong(g, cols, x_shape, w, p):
        gx, gw, gb = correct(g, cols, x_shape, w, p)
        return gx, gw * 1.5, gb

    monkeypatch.setattr(ops, '_conv2d_backward', wrong)
    assert main(['selfcheck', '--only', 'gradcheck']) == EXIT_CHECK_FAILED
    out = capsys.readouterr().out
    assert '❌ gradcheck conv2d' in out
    assert 'CheckFailure' in out


def test_end_to_end(tmp_path, capsys):
    data = tmp_path / 'data'
    run = tmp_path / 'run'
    assert main(['--quiet', 'synth', '--root', str(data), '--count', '4', '--size', '24']) == EXIT_OK
    assert len(list((data / 'LRx2').glob('*.png'))) == 4

    cfg = write_config(tmp_path / 'run.txt', data, run)
    assert main(['--quiet', 'train', '--config', str(cfg)]) == EXIT_OK
    assert (run / 'final.ckpt').exists() and (run / 'step_000002.ckpt').exists()
    assert len(pd.read_csv(run / 'metrics.csv')) == 4

    report = tmp_path / 'report.csv'
    assert main(['--quiet', 'eval', '--ckpt', str(run / 'final.ckpt'), '--lr-dir', str(data / 'LRx2'),
                 '--hr-dir', str(data / 'HR'), '--report', str(report)]) == EXIT_OK
    assert pd.read_csv(report)['name'].iloc[-1] == 'MEAN'
    assert 'shave=2' in capsys.readouterr().out

    assert main(['--quiet', 'eval', '--ckpt', 'none', '--lr-dir', str(data / 'LRx2'),
                 '--hr-dir', str(data / 'HR'), '--self-ensemble']) == EXIT_OK
    assert '[Eval] bicubic' in capsys.readouterr().out

    sr, dmap = tmp_path / 'sr.png', tmp_path / 'div.png'
    lr_file = sorted((data / 'LRx2').glob('*.png'))[0]
    assert main(['infer', '--ckpt', str(run / 'final.ckpt'), '--input', str(lr_file),
                 '--output', str(sr), '--weights', 'target', '--divergence', str(dmap)]) == EXIT_OK
    assert load_png(sr).shape == (24, 24, 3)
    assert load_png(dmap).shape == (24, 24, 3)

    assert main(['compare', str(run / 'metrics.csv'), '--window', '2']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'blocks_non_increasing' in out and '移動平均' in out


def test_resume_via_cli(tmp_path):
    data = tmp_path / 'data'
    main(['--quiet', 'synth', '--root', str(data), '--count', '3', '--size', '16'])
    cfg = write_config(tmp_path / 'a.txt', data, tmp_path / 'a', total_steps=2)
    assert main(['--quiet', 'train', '--config', str(cfg)]) == EXIT_OK
    cfg = write_config(tmp_path / 'a.txt', data, tmp_path / 'a', total_steps=4)
    assert main(['--quiet', 'train', '--config', str(cfg),
                 '--resume', str(tmp_path / 'a' / 'final.ckpt')]) == EXIT_OK
    assert list(pd.read_csv(tmp_path / 'a' / 'metrics.csv')['step']) == [1, 2, 3, 4]


def test_missing_dataset_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / 'c.txt', tmp_path / 'nothing', tmp_path / 'out')
    assert main(['--quiet', 'train', '--config', str(cfg)]) == EXIT_USAGE
    assert 'DatasetError' in capsys.readouterr().out
    assert not (tmp_path / 'out').exists()


def test_unknown_config_key_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / 'c.txt', tmp_path, tmp_path / 'out', learning_rat=0.1)
    assert main(['train', '--config', str(cfg)]) == EXIT_USAGE
    out = capsys.readouterr().out
    assert 'ConfigError' in out and 'learning_rat' in out


def test_empty_eval_dirs_exit_code(tmp_path):
    (tmp_path / 'lr').mkdir()
    (tmp_path / 'hr').mkdir()
    assert main(['eval', '--ckpt', 'none', '--lr-dir', str(tmp_path / 'lr'),
                 '--hr-dir', str(tmp_path / 'hr')]) == EXIT_USAGE


def test_corrupted_checkpoint_exit_code(tmp_path, capsys):
    bad = tmp_path / 'bad.ckpt'
    bad.write_bytes(b'SSCSR001' + np.zeros(5, dtype=np.uint8).tobytes())
    assert main(['infer', '--ckpt', str(bad), '--input', str(tmp_path / 'x.png'),
                 '--output', str(tmp_path / 'y.png')]) == EXIT_USAGE
    assert 'CheckpointError' in capsys.readouterr().out


def test_divergence_needs_checkpoint(tmp_path):
    assert main(['infer', '--ckpt', 'none', '--input', str(tmp_path / 'x.png'),
                 '--output', str(tmp_path / 'y.png'), '--divergence', str(tmp_path / 'd.png')]) == EXIT_USAGE


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
