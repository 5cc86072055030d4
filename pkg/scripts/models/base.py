#!/usr/bin/env python3
"""
===============================================================================
參數集合基底 / Named Parameter Collection
===============================================================================
有序、具名的參數表。EMA 配對與 checkpoint 都依賴名稱順序穩定。
"""

import math
from collections import OrderedDict
from typing import Dict, Iterator, List, Tuple

import numpy as np

from scripts.engine import Tensor, conv2d
from scripts.errors import ShapeError


def init_conv(rng: np.random.Generator, cout: int, cin: int, k: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """權重 ~ U[−1/√fan_in, +1/√fan_in]，bias 為 0"""
    bound = 1.0 / math.sqrt(cin * k * k)
    weight = rng.uniform(-bound, bound, size=(cout, cin, k, k)).astype(np.float32)
    bias = np.zeros(cout, dtype=np.float32)
    return weight, bias


class ConvNet:
    """具名參數表 + 卷積層呼叫的共用邏輯"""

    def __init__(self, params: Dict[str, Tensor]):
        self.params: 'OrderedDict[str, Tensor]' = OrderedDict(params)

    # ------------------------------------------------------------------
    # 參數存取
    # ------------------------------------------------------------------
    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        return list(self.params.items())

    def parameters(self) -> List[Tensor]:
        return list(self.params.values())

    def names(self) -> List[str]:
        return list(self.params.keys())

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state_dict(self) -> 'OrderedDict[str, np.ndarray]':
        return OrderedDict((k, v.data) for k, v in self.params.items())

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        if list(state.keys()) != self.names():
            missing = set(self.names()) - set(state)
            extra = set(state) - set(self.names())
            raise ShapeError(f'參數名稱不符：缺少 {sorted(missing)}，多出 {sorted(extra)}')
        for name, arr in state.items():
            p = self.params[name]
            if tuple(arr.shape) != p.shape:
                raise ShapeError(f'{name}: 形狀 {tuple(arr.shape)} 與網路 {p.shape} 不符')
            p.data = np.array(arr, dtype=p.dtype, copy=True)

    def same_namespace(self, other: 'ConvNet') -> bool:
        return ([(k, v.shape) for k, v in self.params.items()]
                == [(k, v.shape) for k, v in other.params.items()])

    def copy(self, requires_grad: bool = None):
        """逐位元相同的深拷貝"""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.params = OrderedDict(
            (k, Tensor(v.data.copy(), dtype=v.dtype,
                       requires_grad=v.requires_grad if requires_grad is None else requires_grad))
            for k, v in self.params.items())
        return clone

    def astype(self, dtype):
        """換 dtype 的拷貝（grad_check 用 float64）"""
        clone = self.copy()
        for k, v in clone.params.items():
            clone.params[k] = Tensor(v.data.astype(dtype), requires_grad=v.requires_grad)
        return clone

    def _conv(self, prefix: str, x: Tensor) -> Tensor:
        return conv2d(x, self.params[f'{prefix}.weight'], self.params[f'{prefix}.bias'], padding=1)
