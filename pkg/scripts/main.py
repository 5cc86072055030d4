#!/usr/bin/env python3
"""
===============================================================================
主程式 / SSC-SR Command Line
===============================================================================
資料退化、合成資料集、訓練、評測、推論、run 比較與自我檢查

    python3 scripts/main.py synth --root data/synth
    python3 scripts/main.py train --config configs/desk.txt
    python3 scripts/main.py eval --ckpt runs/desk/final.ckpt --lr-dir data/synth/LRx2 --hr-dir data/synth/HR
    python3 scripts/main.py selfcheck

Exit code: 0 成功、1 檢查失敗或數值錯誤、2 設定/資料/環境錯誤
"""
import argparse
import logging
import sys
import time
from pathlib import Path

# ---------------------------------------------------------------------------
# Path 設定
# ---------------------------------------------------------------------------
# 添加父目錄到 Python 路徑
sys.path.insert(0, str(Path(__file__).parent.parent))
from scripts.analysis.compare_runs import WINDOW, compare_runs, to_frame  # noqa: E402
from scripts.analysis.evaluate import (  # noqa: E402
    WEIGHT_CHOICES, bicubic_upscaler, divergence_map, evaluate_dir, network_upscaler,
    select_weights, upscale_file,
)
from scripts.analysis.selfcheck import CHECKS, run_selfcheck  # noqa: E402
from scripts.config import Config, load_run_config  # noqa: E402
from scripts.errors import (  # noqa: E402
    CheckFailure, CheckpointError, ConfigError, DatasetError, ImageFormatError, NumericFault,
    SSCError, ShapeError,
)
from scripts.imaging.color import to_float  # noqa: E402
from scripts.imaging.dataset import degrade_directory, synthesize_dataset  # noqa: E402
from scripts.imaging.png_io import load_png, save_png  # noqa: E402
from scripts.training.checkpoint import load_checkpoint  # noqa: E402
from scripts.training.loop import run_training  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _banner(title: str) -> None:
    print("=" * 70)
    print(title)
    print("=" * 70)


def _ckpt_arg(value: str):
    return None if value.lower() == 'none' else value


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------
def cmd_degrade(args) -> int:
    out = degrade_directory(args.hr_dir, args.out_dir, args.scale, show_progress=not args.quiet)
    print(f"[Degrade] ✓ LR 影像已寫入 {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    index = synthesize_dataset(args.root, count=args.count, size=args.size, scale=args.scale,
                               seed=args.seed, show_progress=not args.quiet)
    print(f"[Synth] ✓ {len(index)} 對影像（{args.size}×{args.size}, x{args.scale}）寫入 {args.root}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    start = time.time()
    _banner(f"🚀 SSC-SR 訓練 alpha={cfg.alpha:g} metric={cfg.consistency_metric} "
            f"steps={cfg.total_steps}")
    print(f"[Train] 資料: {cfg.data_root} (x{cfg.scale})")
    print(f"[Train] 輸出: {cfg.output_dir}")
    if args.resume:
        print(f"[Train] 接續: {args.resume}")
    state = run_training(cfg, resume=args.resume, quiet=args.quiet)
    print(f"[Train] ✓ 完成 step {state.step}，耗時 {time.time() - start:.1f}s")
    print(f"[Train] ✓ metrics: {cfg.metrics_path}")
    print(f"[Train] ✓ checkpoint: {Path(cfg.output_dir) / Config.FINAL_CHECKPOINT}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = _ckpt_arg(args.ckpt)
    report = evaluate_dir(ckpt, args.lr_dir, args.hr_dir, shave=args.shave, weights=args.weights,
                          ensemble=args.self_ensemble, requantize=args.requantize,
                          report_path=args.report, show_progress=not args.quiet)
    source = 'bicubic' if ckpt is None else f'{args.weights}{" + self-ensemble" if args.self_ensemble else ""}'
    print(f"[Eval] {source}: {len(report)} 張, shave={report.shave}"
          f"{', requantized' if args.requantize else ''}")
    print(f"[Eval] PSNR {report.mean_psnr:.4f} dB  SSIM {report.mean_ssim:.4f}")
    if args.report:
        print(f"[Eval] ✓ 報表: {args.report}")
    return EXIT_OK


def cmd_infer(args) -> int:
    ckpt = _ckpt_arg(args.ckpt)
    if ckpt is None:
        if args.divergence:
            raise ConfigError('--divergence 需要 checkpoint（投影頭在 checkpoint 裡）')
        upscale = bicubic_upscaler(int(args.scale))
    else:
        state = load_checkpoint(ckpt)
        upscale = network_upscaler(select_weights(state, args.weights), args.self_ensemble)
    out = upscale_file(upscale, args.input)
    save_png(out, args.output)
    print(f"[Infer] ✓ {args.input} → {args.output} ({out.shape[1]}×{out.shape[0]})")

    if args.divergence:
        lr = to_float(load_png(args.input))
        dmap, p, s = divergence_map(state.online, state.proj, lr)
        save_png(dmap, args.divergence)
        print(f"[Infer] ✓ 投影偏離圖: {args.divergence}  online vs proj: PSNR {p:.2f} dB, SSIM {s:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    summaries = compare_runs(args.metrics, window=args.window)
    print(to_frame(summaries).to_string(index=False))
    for s in summaries:
        mark = '✅' if s.non_increasing else '⚠️ '
        print(f"  {mark} {s.name}: loss_total {args.window} 步移動平均"
              f"{'逐步不增' if s.non_increasing else '有回升'}"
              f"（區塊平均{'不增' if s.blocks_non_increasing else '有回升'}）")
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    report = run_selfcheck(args.only or None, verbose=True)
    if not report.ok:
        raise CheckFailure(f"{len(report.failures)} 項檢查失敗: {', '.join(report.failures)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="SSC-SR self-supervised super-resolution trainer")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL,
                        help="logging 等級（預設取 SSC_LOG_LEVEL）")
    parser.add_argument("--quiet", action="store_true", help="不顯示進度條")
    parser.add_argument("--show-paths", action="store_true", help="先印出 .env 解析後的路徑設定")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="HR → bicubic 退化的 LRx<s>")
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scale", type=int, default=2)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("synth", help="產生合成紋理資料集")
    p.add_argument("--root", default=str(Config.DATA_ROOT))
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="SSC 訓練")
    p.add_argument("--config", required=True)
    p.add_argument("--resume", default=None, help="從 checkpoint 接續")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="資料夾評測（Y 通道 PSNR/SSIM）")
    p.add_argument("--ckpt", required=True, help="checkpoint 路徑，none = bicubic 基準線")
    p.add_argument("--lr-dir", required=True)
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--shave", type=int, default=None, help="邊框裁切（預設 = 放大倍率）")
    p.add_argument("--weights", choices=WEIGHT_CHOICES, default="online")
    p.add_argument("--self-ensemble", action="store_true", help="8 方向平均")
    p.add_argument("--requantize", action="store_true", help="先量化成 8-bit 再算分數")
    p.add_argument("--report", default=None, help="CSV 報表路徑")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="單張影像放大")
    p.add_argument("--ckpt", required=True, help="checkpoint 路徑，none = bicubic")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--weights", choices=WEIGHT_CHOICES, default="online")
    p.add_argument("--self-ensemble", action="store_true")
    p.add_argument("--scale", type=int, default=2, help="只用於 --ckpt none")
    p.add_argument("--divergence", default=None, help="投影偏離圖輸出路徑")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("compare", help="比較多個 metrics.csv")
    p.add_argument("metrics", nargs="+")
    p.add_argument("--window", type=int, default=WINDOW)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("selfcheck", help="梯度/群論/EMA/Adam 自我檢查")
    p.add_argument("--only", nargs="*", choices=list(CHECKS), default=None)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper(), format=LOG_FORMAT)
    if args.show_paths:
        Config.print_paths()

    try:
        return args.func(args)
    except (CheckFailure, NumericFault) as e:
        print(f"\n❌ {type(e).__name__}: {e}")
        return EXIT_CHECK_FAILED
    except (ConfigError, DatasetError, CheckpointError, ImageFormatError, ShapeError) as e:
        print(f"\n❌ {type(e).__name__}: {e}")
        return EXIT_USAGE
    except SSCError as e:
        print(f"\n❌ {type(e).__name__}: {e}")
        return EXIT_CHECK_FAILED
    except OSError as e:
        print(f"\n❌ 檔案/環境錯誤: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
