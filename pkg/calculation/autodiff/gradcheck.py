"""
中心差分梯度校验 (双精度)

相对误差按张量计算: max|analytic - numeric| / max(max|analytic|, max|numeric|, 1e-8)
"""
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .tensor import Graph, Tensor, backward


def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, step: float = 1e-4,
                       indices: Optional[np.ndarray] = None) -> np.ndarray:
    """
    对单个输入张量做中心差分

    :param fn: 无参函数, 读取 tensor.data 计算标量
    :param tensor: 被扰动的张量 (原地扰动后恢复)
    :param step: 差分步长
    :param indices: 只对这些展平下标求差分, 其余位置为 0; None 表示全部
    """
    grad = np.zeros_like(tensor.data, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in (range(flat.size) if indices is None else indices):
        original = flat[i]
        flat[i] = original + step
        plus = float(fn().data)
        flat[i] = original - step
        minus = float(fn().data)
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * step)
    return grad


def analytic_gradients(fn: Callable[[], Tensor], tensors: Sequence[Tensor]) -> Dict[int, np.ndarray]:
    for tensor in tensors:
        tensor.grad = None
    with Graph() as graph:
        loss = fn()
    backward(graph, loss, params=tensors)
    return {id(t): t.grad.astype(np.float64) for t in tensors}


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(float(np.abs(analytic).max(initial=0.0)), float(np.abs(numeric).max(initial=0.0)), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0)) / denom


def check_gradients(fn: Callable[[], Tensor], tensors: Sequence[Tensor], step: float = 1e-4,
                    entries: Optional[int] = None, seed: int = 0) -> float:
    """
    比较解析梯度与中心差分, 返回所有张量中最大的相对误差

    :param fn: 无参函数, 返回标量 Tensor
    :param tensors: 需要校验的叶子张量 (应为 float64 且 requires_grad=True)
    :param entries: 每个张量随机抽取的元素个数, None 表示逐元素全部校验
    :param seed: 抽样种子
    """
    analytic = analytic_gradients(fn, tensors)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for tensor in tensors:
        size = tensor.data.size
        indices = None if entries is None or entries >= size else rng.choice(size, entries, replace=False)
        numeric = numerical_gradient(fn, tensor, step=step, indices=indices)
        expected = analytic[id(tensor)]
        if indices is not None:
            expected, numeric = expected.reshape(-1)[indices], numeric.reshape(-1)[indices]
        worst = max(worst, relative_error(expected, numeric))
    return worst
