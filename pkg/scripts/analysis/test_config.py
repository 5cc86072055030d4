#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""`key = value` 設定檔解析與驗證。"""

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.config import Config, RunConfig, TrainConfig, load_run_config, parse_key_values  # noqa: E402
from scripts.errors import ConfigError  # noqa: E402


def test_defaults():
    cfg = TrainConfig()
    assert cfg.learning_rate == 1e-4
    assert (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon) == (0.9, 0.999, 1e-8)
    assert (cfg.batch_size, cfg.lr_patch_size) == (4, 16)
    assert (cfg.alpha, cfg.ema_beta, cfg.consistency_metric) == (0.01, 0.999, 'L1')
    run = RunConfig()
    assert run.checkpoint_every == 500 and run.eval_every == 0 and run.holdout == 0


def test_comments_and_blank_lines(tmp_path):
    path = tmp_path / 'run.txt'
    path.write_text('# ablation\n\nalpha = 0.1   # stronger\nconsistency_metric = l2\n'
                    f'output_dir = {tmp_path / "out"}\n', encoding='utf-8')
    cfg = load_run_config(path)
    assert cfg.alpha == 0.1
    assert cfg.consistency_metric == 'L2'
    assert cfg.metrics_path == tmp_path / 'out' / Config.METRICS_FILENAME


def test_explicit_log_path():
    cfg = RunConfig(log_path='/tmp/x.csv')
    assert str(cfg.metrics_path) == '/tmp/x.csv'


@pytest.mark.parametrize("text, line, fragment", [
    ('alpha = 0.1\nalhpa = 0.2\n', 2, '未知'),
    ('alpha = 0.1\n\nalpha = 0.2\n', 3, '重複'),
    ('batch_size = four\n', 1, '不是合法'),
    ('# ok\nseed 3\n', 2, '='),
    (' = 3\n', 1, 'key'),
])
def test_malformed_lines_report_line_number(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_key_values(text, path='bad.txt')
    assert info.value.line == line
    assert fragment in str(info.value)
    assert 'bad.txt' in str(info.value)


@pytest.mark.parametrize("overrides", [
    dict(alpha=-0.1), dict(ema_beta=1.5), dict(consistency_metric='vgg'), dict(scale=5),
    dict(learning_rate=0.0), dict(batch_size=0), dict(adam_beta1=1.0), dict(proj_channels=0),
])
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        TrainConfig(**overrides)


def test_text_round_trip():
    cfg = RunConfig(alpha=0.037, seed=11, consistency_metric='L2', output_dir='runs/x', log_path='')
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_train_config_drops_run_fields():
    run = RunConfig(alpha=0.3, holdout=2)
    assert run.train_config() == TrainConfig(alpha=0.3)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / 'nope.txt')


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
