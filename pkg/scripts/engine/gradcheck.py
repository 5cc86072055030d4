#!/usr/bin/env python3
"""
===============================================================================
梯度檢查 / Finite-Difference Gradient Check
===============================================================================

在 float64 下比較解析梯度與中央差分。

非純量輸出先乘上一個固定的隨機投影再加總，變成純量 f。
誤差是相對誤差 |a − n| / max(|a|, |n|, floor)。floor 是中央差分的捨入解析度
（ε_machine·max(1, |f|) / epsilon）放大 ROUNDOFF_MARGIN 倍：只有小到差分量不出來的
梯度才改用 floor 當分母。

ReLU、L1 這類分段線性運算組成的大網路，擾動可能剛好跨過折點。
給了 kink_tol 時，每個座標再用 epsilon/2 差分一次：平滑處單邊差分的差距隨步長減半、
中央差分不變；兩者之一不成立（相對 kink_tol）就視為跨過折點，跳過不計。
"""

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from scripts.engine.ops import scale, tensor_sum
from scripts.engine.tensor import Tape, Tensor, backward, no_tape

DEFAULT_EPSILON = 1e-5
ROUNDOFF_MARGIN = 1e6


def _as_scalar(out: Tensor, projection) -> Tensor:
    if out.data.size == 1 and projection is None:
        return out
    return tensor_sum(scale(out, projection))


def grad_check(op: Callable[..., Tensor], inputs: Sequence[np.ndarray],
               epsilon: float = DEFAULT_EPSILON, *, seed: int = 0,
               max_elements: Optional[int] = None,
               wrt: Optional[Iterable[int]] = None,
               kink_tol: Optional[float] = None) -> float:
    """回傳所有被檢查座標中最大的誤差。

    Args:
        op: 接收 Tensor、回傳 Tensor 的函式
        inputs: 各輸入的初始值（會轉成 float64 副本）
        epsilon: 中央差分步長
        max_elements: 每個輸入最多隨機抽查幾個座標（None = 全部）
        wrt: 只檢查這些輸入的索引
        kink_tol: 兩種步長的差分相對差距超過此值視為跨過折點（None = 不跳過）
    """
    arrays = [np.array(a, dtype=np.float64, copy=True) for a in inputs]
    rng = np.random.default_rng(seed)
    check = set(range(len(arrays))) if wrt is None else set(wrt)

    with no_tape():
        first_out = op(*[Tensor(a) for a in arrays])
    projection = None if first_out.data.size == 1 else rng.standard_normal(first_out.shape)

    def f() -> float:
        with no_tape():
            out = _as_scalar(op(*[Tensor(a) for a in arrays]), projection)
        return out.item()

    tensors = [Tensor(a.copy(), requires_grad=(k in check)) for k, a in enumerate(arrays)]
    with Tape() as tape:
        loss = _as_scalar(op(*tensors), projection)
    if loss.tape_id is None:
        # 輸出與所有待檢輸入無關：解析梯度全為 0
        analytic = [np.zeros_like(a) for a in arrays]
    else:
        backward(loss, tape)
        analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    f0 = f()
    floor = ROUNDOFF_MARGIN * np.finfo(np.float64).eps * max(1.0, abs(f0)) / epsilon
    worst = 0.0
    for k, arr in enumerate(arrays):
        if k not in check:
            continue
        flat = arr.reshape(-1)
        idx = np.arange(flat.size)
        if max_elements is not None and flat.size > max_elements:
            idx = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
        grad_flat = analytic[k].reshape(-1)
        for i in idx:
            orig = flat[i]

            def one_sided(h):
                flat[i] = orig + h
                fp = f()
                flat[i] = orig - h
                fm = f()
                flat[i] = orig
                return (fp - f0) / h, (f0 - fm) / h

            fd, bd = one_sided(epsilon)
            numeric = (fd + bd) / 2
            if kink_tol is not None:
                fd2, bd2 = one_sided(epsilon / 2)
                tol = kink_tol * max(floor, abs(fd), abs(bd))
                if abs((fd - bd) - 2 * (fd2 - bd2)) > tol or abs(numeric - (fd2 + bd2) / 2) > tol:
                    continue
            a = float(grad_flat[i])
            err = abs(a - numeric) / max(floor, abs(a), abs(numeric))
            worst = max(worst, err)
    return worst
