#!/usr/bin/env python3
"""
===============================================================================
訓練迴圈 / Training Loop
===============================================================================

    run_training(cfg)                    從頭訓練
    run_training(cfg, resume='x.ckpt')   從 checkpoint 接續

輸出（都在 cfg.output_dir 下）：
    resolved_config.txt      完整展開的設定
    metrics.csv              step,loss_total,loss_rec,loss_cons（每步一列）
    eval_log.csv             step,weights,psnr_db,ssim（holdout > 0 且 eval_every > 0 時）
    step_000500.ckpt         每 checkpoint_every 步
    latest.ckpt              最新一次的週期 checkpoint
    final.ckpt               結束時

接續訓練時 metrics.csv / eval_log.csv 會先砍掉 step > t 的列，
之後寫出的內容與一次跑完的結果逐列相同。
"""

import logging
from dataclasses import fields
from pathlib import Path
from typing import Callable, List, Optional

import pandas as pd
from tqdm import tqdm

from scripts.analysis.evaluate import evaluate_pairs, network_upscaler
from scripts.config import Config, RunConfig, TrainConfig
from scripts.errors import ConfigError, DatasetError
from scripts.imaging.dataset import DatasetIndex, load_pairs
from scripts.imaging.patches import PatchBatchSampler
from scripts.training.checkpoint import load_checkpoint, save_checkpoint
from scripts.training.trainer import STREAM_PATCH, StepMetrics, TrainState, init_state, ssc_step

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ['step', 'loss_total', 'loss_rec', 'loss_cons']
EVAL_COLUMNS = ['step', 'weights', 'psnr_db', 'ssim']
FLOAT_FORMAT = '%.9g'

# 接續訓練時允許與 checkpoint 不同的設定（其餘必須一致）
RESUMABLE_KEYS = {'total_steps', 'output_dir', 'checkpoint_every', 'eval_every', 'log_path', 'data_root'}


class CsvLog:
    """逐列附加的 CSV。每列一次 to_csv(mode='a')。"""

    def __init__(self, path, columns: List[str]):
        self.path = Path(path)
        self.columns = columns

    def start(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns=self.columns).to_csv(self.path, index=False)

    def truncate_after(self, step: int) -> int:
        """只留 step ≤ t 的列，回傳保留的列數；檔案不存在就重新開始"""
        if not self.path.exists():
            self.start()
            return 0
        df = pd.read_csv(self.path)
        if list(df.columns) != self.columns:
            raise DatasetError(f'{self.path}: 欄位 {list(df.columns)} 與預期 {self.columns} 不符')
        kept = df[df['step'] <= step]
        kept.to_csv(self.path, index=False, float_format=FLOAT_FORMAT)
        return len(kept)

    def append(self, row: dict) -> None:
        pd.DataFrame([row], columns=self.columns).to_csv(
            self.path, mode='a', header=False, index=False, float_format=FLOAT_FORMAT)

    def read(self) -> pd.DataFrame:
        return pd.read_csv(self.path)


def _check_resume_config(saved: TrainConfig, current: RunConfig) -> None:
    diffs = []
    for f in fields(RunConfig):
        if f.name in RESUMABLE_KEYS:
            continue
        a, b = getattr(saved, f.name, None), getattr(current, f.name)
        if a != b:
            diffs.append(f'{f.name}: checkpoint={a!r} 設定檔={b!r}')
    if diffs:
        raise ConfigError('接續訓練的設定與 checkpoint 不一致: ' + '; '.join(diffs))


def split_holdout(index: DatasetIndex, holdout: int):
    """最後 holdout 對留作週期評測，不參與 patch 取樣"""
    pairs = load_pairs(index)
    if holdout >= len(pairs):
        raise DatasetError(f'holdout={holdout} 但資料集只有 {len(pairs)} 對影像')
    if holdout == 0:
        return pairs, [], []
    return pairs[:-holdout], pairs[-holdout:], index.names[-holdout:]


def _evaluate_holdout(state: TrainState, pairs, names, log: CsvLog) -> None:
    for weights, net in (('online', state.online), ('target', state.target)):
        report = evaluate_pairs(network_upscaler(net), pairs, names, shave=state.config.scale,
                                weights=weights)
        log.append({'step': state.step, 'weights': weights,
                    'psnr_db': report.mean_psnr, 'ssim': report.mean_ssim})
        logger.info('step %d holdout %s: PSNR %.4f dB, SSIM %.4f',
                    state.step, weights, report.mean_psnr, report.mean_ssim)


def run_training(cfg: RunConfig, resume=None, quiet: bool = False,
                 step_fn: Callable = ssc_step) -> TrainState:
    """資料集與 checkpoint 都先讀完才寫任何輸出"""
    index = DatasetIndex.from_root(cfg.data_root, cfg.scale)
    train_pairs, holdout_pairs, holdout_names = split_holdout(index, cfg.holdout)
    sampler = PatchBatchSampler(train_pairs, cfg.lr_patch_size, cfg.scale, cfg.batch_size)

    if resume:
        state = load_checkpoint(resume)
        _check_resume_config(state.config, cfg)
        state.config = cfg
        if state.step > cfg.total_steps:
            raise ConfigError(f'checkpoint 已在 step {state.step}，超過 total_steps={cfg.total_steps}')
    else:
        state = init_state(cfg)

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / Config.RESOLVED_CONFIG_FILENAME).write_text(cfg.to_text(), encoding='utf-8')

    metrics = CsvLog(cfg.metrics_path, METRICS_COLUMNS)
    evals = CsvLog(out_dir / Config.EVAL_LOG_FILENAME, EVAL_COLUMNS)
    do_eval = cfg.eval_every > 0 and bool(holdout_pairs)
    if resume:
        kept = metrics.truncate_after(state.step)
        if do_eval:
            evals.truncate_after(state.step)
        logger.info('從 step %d 接續（metrics 保留 %d 列）', state.step, kept)
    else:
        metrics.start()
        if do_eval:
            evals.start()

    logger.info('訓練 %d 張影像（holdout %d），%d → %d 步，alpha=%g, metric=%s',
                len(train_pairs), len(holdout_pairs), state.step, cfg.total_steps,
                cfg.alpha, cfg.consistency_metric)

    bar = tqdm(total=cfg.total_steps, initial=state.step, desc='train', disable=quiet)
    last: Optional[StepMetrics] = None
    try:
        while state.step < cfg.total_steps:
            batch = sampler.next_batch(state.rngs[STREAM_PATCH])
            state, last = step_fn(state, batch)
            metrics.append(last.as_row())
            bar.update(1)
            bar.set_postfix(loss=f'{last.loss_total:.4f}', rec=f'{last.loss_rec:.4f}',
                            cons=f'{last.loss_cons:.4f}')

            if cfg.checkpoint_every and state.step % cfg.checkpoint_every == 0:
                save_checkpoint(state, out_dir / f'step_{state.step:06d}.ckpt')
                save_checkpoint(state, out_dir / Config.LATEST_CHECKPOINT)
            if do_eval and state.step % cfg.eval_every == 0:
                _evaluate_holdout(state, holdout_pairs, holdout_names, evals)
    finally:
        bar.close()

    save_checkpoint(state, out_dir / Config.FINAL_CHECKPOINT)
    if last is not None:
        logger.info('完成 step %d: loss %.6f (rec %.6f, cons %.6f)',
                    state.step, last.loss_total, last.loss_rec, last.loss_cons)
    return state
