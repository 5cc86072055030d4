#!/usr/bin/env python3
"""
===============================================================================
Checkpoint 讀寫 / Checkpoint Serialization
===============================================================================

little-endian 二進位格式：

    magic      b"SSCSR001"            8 bytes
    version    u32
    step       u64
    config     u32 長度 + UTF-8 `key = value` 文字（完整展開的 RunConfig）
    records    u32 筆數，之後每筆:
                 name_len u32, name UTF-8, ndim u32, dims u32×ndim, f32 payload
    rng        u32 長度 + UTF-8 JSON（各子流的 bit_generator.state）

紀錄名稱：online.* / target.* / proj.* / adam.m.<參數> / adam.v.<參數>
寫入先寫暫存檔再 os.replace，不會留下寫一半的檔案。
"""

import json
import logging
import os
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from scripts.config import RunConfig
from scripts.errors import CheckpointError, ConfigError
from scripts.training.trainer import TrainState, init_state

logger = logging.getLogger(__name__)

MAGIC = b'SSCSR001'
FORMAT_VERSION = 1


def _named_tensors(state: TrainState) -> 'OrderedDict[str, np.ndarray]':
    out = OrderedDict()
    for prefix, net in (('online', state.online), ('target', state.target), ('proj', state.proj)):
        for name, p in net.named_parameters():
            out[f'{prefix}.{name}'] = p.data
    for name, arr in state.adam_m.items():
        out[f'adam.m.{name}'] = arr
    for name, arr in state.adam_v.items():
        out[f'adam.v.{name}'] = arr
    return out


def _rng_blob(state: TrainState) -> bytes:
    payload = {name: gen.bit_generator.state for name, gen in sorted(state.rngs.items())}
    return json.dumps(payload, sort_keys=True).encode('utf-8')


def encode_checkpoint(state: TrainState) -> bytes:
    parts = [MAGIC, struct.pack('<IQ', FORMAT_VERSION, state.step)]
    config_bytes = state.config.to_text().encode('utf-8')
    parts.append(struct.pack('<I', len(config_bytes)))
    parts.append(config_bytes)

    tensors = _named_tensors(state)
    parts.append(struct.pack('<I', len(tensors)))
    for name, arr in tensors.items():
        name_bytes = name.encode('utf-8')
        parts.append(struct.pack('<I', len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack('<I', arr.ndim))
        parts.append(struct.pack(f'<{arr.ndim}I', *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype='<f4').tobytes())

    rng = _rng_blob(state)
    parts.append(struct.pack('<I', len(rng)))
    parts.append(rng)
    return b''.join(parts)


def save_checkpoint(state: TrainState, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as f:
        f.write(encode_checkpoint(state))
    os.replace(tmp, path)
    logger.info('checkpoint 已寫入 %s (step %d)', path, state.step)
    return path


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise CheckpointError(f'檔案被截斷（需要 {n} bytes，位置 {self.pos}/{len(self.buf)}）')
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(buf: bytes) -> Tuple[int, str, Dict[str, np.ndarray], Dict]:
    r = _Reader(buf)
    magic = r.take(len(MAGIC))
    if magic != MAGIC:
        raise CheckpointError(f'magic 不符: {magic!r}（不是 SSC-SR checkpoint）')
    version, step = r.unpack('<IQ')
    if version != FORMAT_VERSION:
        raise CheckpointError(f'checkpoint 版本不相容: 檔案版本={version}, 期望版本={FORMAT_VERSION}')
    (config_len,) = r.unpack('<I')
    try:
        config_text = r.take(config_len).decode('utf-8')
    except UnicodeDecodeError as e:
        raise CheckpointError(f'設定區塊不是合法 UTF-8: {e}') from None

    (count,) = r.unpack('<I')
    tensors = OrderedDict()
    for _ in range(count):
        (name_len,) = r.unpack('<I')
        name = r.take(name_len).decode('utf-8', errors='replace')
        (ndim,) = r.unpack('<I')
        dims = r.unpack(f'<{ndim}I') if ndim else ()
        size = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        payload = r.take(4 * size)
        tensors[name] = np.frombuffer(payload, dtype='<f4').astype(np.float32).reshape(dims)

    (rng_len,) = r.unpack('<I')
    try:
        rng_state = json.loads(r.take(rng_len).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f'亂數狀態區塊損壞: {e}') from None
    if r.pos != len(buf):
        raise CheckpointError(f'檔尾多出 {len(buf) - r.pos} bytes')
    return step, config_text, tensors, rng_state


def _restore_rng(state_dict: Dict) -> np.random.Generator:
    gen = np.random.Generator(getattr(np.random, state_dict['bit_generator'])())
    gen.bit_generator.state = state_dict
    return gen


def load_checkpoint(path) -> TrainState:
    """讀回完整的 TrainState。任何錯誤都在建出新 state 之前拋出。"""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f'checkpoint 不存在: {path}')
    step, config_text, tensors, rng_state = decode_checkpoint(path.read_bytes())
    try:
        cfg = RunConfig.from_text(config_text)
    except ConfigError as e:
        raise CheckpointError(f'checkpoint 內的設定無法解析: {e}') from None

    # 用設定重建一份骨架，再逐一比對名稱與形狀
    state = init_state(cfg)
    expected = _named_tensors(state)
    missing = [k for k in expected if k not in tensors]
    extra = [k for k in tensors if k not in expected]
    if missing or extra:
        raise CheckpointError(f'紀錄與設定不符：缺少 {missing[:5]}，多出 {extra[:5]}')
    for name, ref in expected.items():
        if tensors[name].shape != ref.shape:
            raise CheckpointError(f'{name}: 形狀 {tensors[name].shape} 與設定推得的 {ref.shape} 不符')

    for prefix, net in (('online', state.online), ('target', state.target), ('proj', state.proj)):
        net.load_state_dict(OrderedDict((n, tensors[f'{prefix}.{n}']) for n in net.names()))
    for name in state.adam_m:
        state.adam_m[name] = tensors[f'adam.m.{name}'].copy()
        state.adam_v[name] = tensors[f'adam.v.{name}'].copy()
    try:
        state.rngs = {name: _restore_rng(st) for name, st in rng_state.items()}
    except (KeyError, AttributeError, TypeError, ValueError) as e:
        raise CheckpointError(f'亂數狀態無法還原: {e}') from None
    state.step = int(step)
    return state

