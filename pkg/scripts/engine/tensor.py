#!/usr/bin/env python3
"""
===============================================================================
張量與反向傳播紀錄 / Tensor & Autodiff Tape
===============================================================================

Tensor 包一個連續、row-major 的 numpy 陣列（訓練時 float32，grad_check 時 float64），
加上選用的 grad 緩衝區與它在 Tape 上的節點編號。

Tape 只活在一個訓練步裡：
    with Tape() as tape:
        loss = ...            # 期間的運算會被記錄
    backward(loss, tape)      # 逆拓撲順序掃一次

不在任何 Tape 之內（或在 no_tape() 裡）的運算不會被記錄，
target 分支就是靠這個做到 stop-gradient。
"""

import contextvars
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from scripts.errors import SSCError, ShapeError

FLOAT_TYPES = (np.float32, np.float64)

_ACTIVE_TAPE = contextvars.ContextVar('active_tape', default=None)


class Tensor:
    """稠密張量。data 形狀即 shape，grad 與 data 同形同型。"""

    __slots__ = ('data', 'grad', 'requires_grad', 'tape_id', 'name')

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str = None):
        arr = np.asarray(data)
        if dtype is None:
            dtype = arr.dtype if arr.dtype in FLOAT_TYPES else np.float32
        self.data = np.ascontiguousarray(arr, dtype=dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.tape_id: Optional[int] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f'item() 只適用單一元素張量，shape={self.shape}')
        return float(self.data.reshape(()))

    def detach(self) -> 'Tensor':
        """同一份資料、不帶 tape 連結的常數張量"""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=self.data.dtype)
        if g.shape != self.data.shape:
            g = np.broadcast_to(g, self.data.shape)
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad = self.grad + g

    def __add__(self, other):
        from scripts.engine.ops import add
        return add(self, other)

    def __sub__(self, other):
        from scripts.engine.ops import sub
        return sub(self, other)

    def __mul__(self, constant):
        from scripts.engine.ops import scale
        return scale(self, constant)

    __rmul__ = __mul__

    def __repr__(self):
        flag = ', requires_grad' if self.requires_grad else ''
        return f'Tensor(shape={self.shape}, dtype={self.dtype}{flag})'


@dataclass
class Node:
    """一個被記錄的運算：輸出、輸入、以及 grad_out → 各輸入 grad 的規則"""
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """運算紀錄。節點依建立順序排列，天然就是合法的拓撲順序。"""

    def __init__(self):
        self.nodes: List[Node] = []
        self.consumed = False
        self._token = None

    def record(self, op: str, output: Tensor, inputs: Tuple[Tensor, ...], backward_fn) -> Tensor:
        output.requires_grad = True
        output.tape_id = len(self.nodes)
        self.nodes.append(Node(op, output, tuple(inputs), backward_fn))
        return output

    def touches(self, tensor: Tensor) -> bool:
        """tensor 是否出現在任何節點的輸入或輸出"""
        return any(tensor is node.output or any(tensor is t for t in node.inputs)
                   for node in self.nodes)

    def ops(self) -> List[str]:
        return [node.op for node in self.nodes]

    def __len__(self):
        return len(self.nodes)

    def __enter__(self) -> 'Tape':
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None


class no_tape:
    """區塊內的運算一律不記錄（target 分支、推論、數值微分）"""

    def __enter__(self):
        self._token = _ACTIVE_TAPE.set(None)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _ACTIVE_TAPE.reset(self._token)


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


def record(op: str, output: Tensor, inputs: Sequence[Tensor], backward_fn) -> Tensor:
    """有 Tape 且任一輸入需要梯度時才記錄"""
    tape = active_tape()
    if tape is None or not any(t.requires_grad for t in inputs):
        return output
    return tape.record(op, output, tuple(inputs), backward_fn)


def backward(loss: Tensor, tape: Tape) -> None:
    """從純量 loss 逆拓撲掃描；同一張量被用 k 次就累加 k 份上游梯度。"""
    if loss.data.size != 1:
        raise ShapeError(f'backward 需要純量 loss，得到 shape={loss.shape}')
    idx = loss.tape_id
    if idx is None or idx >= len(tape.nodes) or tape.nodes[idx].output is not loss:
        raise SSCError('loss 沒有記錄在這個 tape 上（detached）')
    if tape.consumed:
        raise SSCError('tape 已經反向傳播過一次')
    tape.consumed = True

    loss.accumulate_grad(np.ones_like(loss.data))
    for node in reversed(tape.nodes[:idx + 1]):
        g = node.output.grad
        if g is None:
            continue
        in_grads = node.backward(g)
        for t, gi in zip(node.inputs, in_grads):
            if gi is None or not t.requires_grad:
                continue
            t.accumulate_grad(gi)
