"""
可微基础运算

除标量与张量之外不做隐式广播; 需要广播的地方使用显式运算 (add_row_bias, expand).
"""
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from utils.exceptions import ContractError, DimensionError

from .tensor import Function, Tensor


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op} 要求形状一致", a.shape, b.shape)


# ---------------------------------------------------------------- 逐元素运算

class Add(Function):
    name = "add"

    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    name = "sub"

    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    name = "mul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Scale(Function):
    name = "scale"

    def __init__(self, factor: float):
        self.factor = factor

    def forward(self, x):
        return x * self.factor

    def backward(self, grad):
        return (grad * self.factor,)


class AddScalar(Function):
    name = "add_scalar"

    def __init__(self, value: float):
        self.value = value

    def forward(self, x):
        return x + self.value

    def backward(self, grad):
        return (grad,)


class AddRowBias(Function):
    """x[..., D] + b[D]"""
    name = "add_row_bias"

    def forward(self, x, b):
        self.features = b.shape[0]
        return x + b

    def backward(self, grad):
        return grad, grad.reshape(-1, self.features).sum(axis=0)


class Expand(Function):
    """在前面追加维度并复制: x[S] -> out[leading + S]"""
    name = "expand"

    def __init__(self, leading: Tuple[int, ...]):
        self.leading = tuple(leading)

    def forward(self, x):
        return np.ascontiguousarray(np.broadcast_to(x, self.leading + x.shape))

    def backward(self, grad):
        return (grad.sum(axis=tuple(range(len(self.leading)))),)


_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


class GELU(Function):
    """tanh 近似的 GELU"""
    name = "gelu"

    def forward(self, x):
        self.x = x
        self.t = np.tanh(_GELU_C * (x + _GELU_K * x ** 3))
        return 0.5 * x * (1.0 + self.t)

    def backward(self, grad):
        x, t = self.x, self.t
        du = _GELU_C * (1.0 + 3.0 * _GELU_K * x ** 2)
        return (grad * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * du),)


# ---------------------------------------------------------------- 矩阵运算

class MatMul(Function):
    name = "matmul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


class BatchMatMul(Function):
    name = "bmm"

    def forward(self, a, b):
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        return np.matmul(grad, np.swapaxes(self.b, -1, -2)), np.matmul(np.swapaxes(self.a, -1, -2), grad)


# ---------------------------------------------------------------- 归一化

class Softmax(Function):
    name = "softmax"

    def __init__(self, axis: int = -1):
        self.axis = axis

    def forward(self, x):
        shifted = x - x.max(axis=self.axis, keepdims=True)
        exp = np.exp(shifted)
        self.y = exp / exp.sum(axis=self.axis, keepdims=True)
        return self.y

    def backward(self, grad):
        y = self.y
        return (y * (grad - (grad * y).sum(axis=self.axis, keepdims=True)),)


class LayerNorm(Function):
    """对最后一维做层归一化, 再做逐通道仿射"""
    name = "layer_norm"

    def __init__(self, eps: float = 1e-5):
        self.eps = eps

    def forward(self, x, gain, bias):
        mean = x.mean(axis=-1, keepdims=True)
        centered = x - mean
        var = (centered ** 2).mean(axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + self.eps)
        self.x_hat = centered * self.inv_std
        self.gain = gain
        return self.x_hat * gain + bias

    def backward(self, grad):
        features = self.gain.shape[0]
        flat_grad = grad.reshape(-1, features)
        d_gain = (flat_grad * self.x_hat.reshape(-1, features)).sum(axis=0)
        d_bias = flat_grad.sum(axis=0)
        d_hat = grad * self.gain
        d_x = self.inv_std * (
            d_hat
            - d_hat.mean(axis=-1, keepdims=True)
            - self.x_hat * (d_hat * self.x_hat).mean(axis=-1, keepdims=True)
        )
        return d_x, d_gain, d_bias


# ---------------------------------------------------------------- 形状与聚合

class Concat(Function):
    name = "concat"

    def __init__(self, axis: int = -1):
        self.axis = axis

    def forward(self, *arrays):
        self.sizes = [a.shape[self.axis] for a in arrays]
        return np.concatenate(arrays, axis=self.axis)

    def backward(self, grad):
        splits = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, splits, axis=self.axis))


class Mean(Function):
    name = "mean"

    def __init__(self, axis: Optional[int] = None):
        self.axis = axis

    def forward(self, x):
        self.input_shape = x.shape
        return np.asarray(x.mean(axis=self.axis))

    def backward(self, grad):
        if self.axis is None:
            count = int(np.prod(self.input_shape))
            return (np.broadcast_to(grad, self.input_shape) / count,)
        count = self.input_shape[self.axis]
        expanded = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(expanded, self.input_shape) / count,)


class Sum(Function):
    name = "sum"

    def forward(self, x):
        self.input_shape = x.shape
        return np.asarray(x.sum())

    def backward(self, grad):
        return (np.full(self.input_shape, grad, dtype=grad.dtype),)


class Reshape(Function):
    name = "reshape"

    def __init__(self, shape: Tuple[int, ...]):
        self.shape = tuple(shape)

    def forward(self, x):
        self.input_shape = x.shape
        return x.reshape(self.shape)

    def backward(self, grad):
        return (grad.reshape(self.input_shape),)


class Transpose(Function):
    name = "transpose"

    def __init__(self, axes: Tuple[int, ...]):
        self.axes = tuple(axes)

    def forward(self, x):
        return np.ascontiguousarray(np.transpose(x, self.axes))

    def backward(self, grad):
        return (np.ascontiguousarray(np.transpose(grad, np.argsort(self.axes))),)


class GatherRows(Function):
    """按下标取第 0 维: out = x[index]"""
    name = "gather_rows"

    def __init__(self, index: np.ndarray):
        self.index = np.asarray(index, dtype=np.int64)
        self.unique = np.unique(self.index).size == self.index.size

    def forward(self, x):
        self.input_shape = x.shape
        return x[self.index]

    def backward(self, grad):
        out = np.zeros(self.input_shape, dtype=grad.dtype)
        if self.unique:
            out[self.index] = grad
        else:
            np.add.at(out, self.index, grad)
        return (out,)


class Embedding(Function):
    """查表: table[V, H], index[...] -> out[..., H]"""
    name = "embedding"

    def __init__(self, index: np.ndarray):
        self.index = np.asarray(index, dtype=np.int64)

    def forward(self, table):
        self.table_shape = table.shape
        return table[self.index]

    def backward(self, grad):
        out = np.zeros(self.table_shape, dtype=grad.dtype)
        np.add.at(out, self.index.reshape(-1), grad.reshape(-1, self.table_shape[-1]))
        return (out,)


# ---------------------------------------------------------------- 函数式接口

def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("add", a, b)
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("sub", a, b)
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("mul", a, b)
    return Mul.apply(a, b)


def scale(x: Tensor, factor: float) -> Tensor:
    return Scale.apply(x, factor=float(factor))


def add_scalar(x: Tensor, value: float) -> Tensor:
    return AddScalar.apply(x, value=float(value))


def add_row_bias(x: Tensor, bias: Tensor) -> Tensor:
    if bias.data.ndim != 1 or x.shape[-1] != bias.shape[0]:
        raise DimensionError("add_row_bias 偏置长度与最后一维不一致", x.shape, bias.shape)
    return AddRowBias.apply(x, bias)


def expand(x: Tensor, leading: Sequence[int]) -> Tensor:
    return Expand.apply(x, leading=tuple(int(n) for n in leading))


def gelu(x: Tensor) -> Tensor:
    return GELU.apply(x)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul 内维不匹配", a.shape, b.shape)
    return MatMul.apply(a, b)


def bmm(a: Tensor, b: Tensor) -> Tensor:
    if (a.data.ndim < 3 or a.data.ndim != b.data.ndim
            or a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]):
        raise DimensionError("bmm 批维或内维不匹配", a.shape, b.shape)
    return BatchMatMul.apply(a, b)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x[..., Din] @ W[Din, Dout] (+ b), 前导维展平为行"""
    if x.shape[-1] != weight.shape[0]:
        raise DimensionError("linear 输入通道与权重不一致", x.shape, weight.shape)
    leading = x.shape[:-1]
    out = matmul(reshape(x, (-1, x.shape[-1])), weight)
    if bias is not None:
        out = add_row_bias(out, bias)
    return reshape(out, leading + (weight.shape[1],))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if not -x.data.ndim <= axis < x.data.ndim:
        raise ContractError(f"softmax 轴越界: axis={axis}, ndim={x.data.ndim}")
    return Softmax.apply(x, axis=axis)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    if gain.shape != (x.shape[-1],) or bias.shape != (x.shape[-1],):
        raise DimensionError("layer_norm 仿射参数与归一化维度不一致", x.shape, gain.shape, bias.shape)
    return LayerNorm.apply(x, gain, bias, eps=eps)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    first = tensors[0].shape
    ndim = len(first)
    ax = axis % ndim
    for t in tensors[1:]:
        if len(t.shape) != ndim or any(t.shape[i] != first[i] for i in range(ndim) if i != ax):
            raise DimensionError("concat 非拼接维不一致", first, t.shape)
    return Concat.apply(*tensors, axis=ax)


def mean(x: Tensor, axis: Optional[int] = None) -> Tensor:
    return Mean.apply(x, axis=axis)


def sum_all(x: Tensor) -> Tensor:
    return Sum.apply(x)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(int(n) for n in shape))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    return Transpose.apply(x, axes=tuple(int(a) for a in axes))


def gather_rows(x: Tensor, index: np.ndarray) -> Tensor:
    return GatherRows.apply(x, index=index)


def embedding(table: Tensor, index: np.ndarray) -> Tensor:
    if table.data.ndim != 2:
        raise DimensionError("embedding 表必须是二维", table.shape)
    return Embedding.apply(table, index=index)


WindowSize = Union[int, Tuple[int, int]]


def window_shape(window: WindowSize) -> Tuple[int, int]:
    """窗口尺寸统一为 (高, 宽)"""
    if isinstance(window, (tuple, list)):
        return int(window[0]), int(window[1])
    return int(window), int(window)


def window_permutation(leading: int, height: int, width: int, window: WindowSize) -> np.ndarray:
    """
    窗口划分使用的下标排列

    输入按 (L, H, W) 行优先展平, 输出按 (L, H/wh, W/ww, wh, ww) 排列,
    即每 wh*ww 个连续元素属于同一个窗口.
    """
    wh, ww = window_shape(window)
    if height % wh or width % ww:
        raise DimensionError(f"token 网格无法被窗口 {wh}x{ww} 整除", (leading, height, width))
    grid = np.arange(leading * height * width).reshape(leading, height // wh, wh, width // ww, ww)
    return grid.transpose(0, 1, 3, 2, 4).reshape(-1)


def window_partition(x: Tensor, window: WindowSize) -> Tensor:
    """x[L, H, W, C] -> windows[num_windows, wh*ww, C]"""
    leading, height, width, channels = x.shape
    wh, ww = window_shape(window)
    perm = window_permutation(leading, height, width, (wh, ww))
    flat = gather_rows(reshape(x, (-1, channels)), perm)
    return reshape(flat, (-1, wh * ww, channels))


def window_merge(windows: Tensor, leading: int, height: int, width: int, window: WindowSize) -> Tensor:
    """window_partition 的逆运算: windows[num_windows, wh*ww, C] -> x[L, H, W, C]"""
    channels = windows.shape[-1]
    perm = window_permutation(leading, height, width, window)
    flat = gather_rows(reshape(windows, (-1, channels)), np.argsort(perm))
    return reshape(flat, (leading, height, width, channels))
