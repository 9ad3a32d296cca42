"""
反向模式自动微分核心: Tensor, Graph, Function

用法::

    with Graph() as graph:
        loss = model(x)
    backward(graph, loss, params=store.parameters())

只有在活动 Graph 内、且至少一个输入 requires_grad 时才记录节点;
Graph 通过 contextvars 绑定, 不同线程各自持有自己的 Graph.
"""
import contextvars
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from utils.exceptions import ContractError

_ACTIVE_GRAPH: contextvars.ContextVar = contextvars.ContextVar("active_graph", default=None)

DEFAULT_DTYPE = np.float32


class Tensor:
    """带梯度的 n 维实数数组 (行优先)"""

    def __init__(self,
                 data: Any,
                 requires_grad: bool = False,
                 name: Optional[str] = None,
                 dtype: Optional[np.dtype] = None):
        """
        :param data: 数组或可转换为数组的数据
        :param requires_grad: 是否需要梯度 (叶子参数)
        :param name: 可选名称, 参数存储中使用
        :param dtype: 数据类型, 默认沿用输入的浮点类型, 非浮点输入转为 float32
        """
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = np.ascontiguousarray(array)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.node: Optional["Node"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def is_finite(self) -> bool:
        finite = bool(np.isfinite(self.data).all())
        if self.grad is not None:
            finite = finite and bool(np.isfinite(self.grad).all())
        return finite

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    # 运算符仅覆盖同形状张量之间及标量与张量之间的运算
    def __add__(self, other):
        from . import ops
        return ops.add_scalar(self, other) if np.isscalar(other) else ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.add_scalar(self, -other) if np.isscalar(other) else ops.sub(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __mul__(self, other):
        from . import ops
        return ops.scale(self, other) if np.isscalar(other) else ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __repr__(self) -> str:
        label = f", name='{self.name}'" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"


@dataclass
class Node:
    """计算图节点: 一次前向运算及其反向函数"""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
    context: Dict[str, Any] = field(default_factory=dict)


class Graph:
    """按前向执行顺序记录的节点列表, 天然满足拓扑序"""

    def __init__(self):
        self.nodes: List[Node] = []
        self._token = None

    def record(self, node: Node) -> None:
        self.nodes.append(node)

    def __enter__(self) -> "Graph":
        self._token = _ACTIVE_GRAPH.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_GRAPH.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.nodes)


def active_graph() -> Optional[Graph]:
    return _ACTIVE_GRAPH.get()


class Function:
    """
    可微运算基类

    子类实现 forward(*arrays) -> ndarray 和 backward(grad) -> 每个输入的梯度 (不可微输入返回 None).
    forward 中需要在反向使用的中间量保存在 self 上.
    """

    name = "function"

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        raise NotImplementedError("子类必须实现forward方法")

    def backward(self, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        raise NotImplementedError("子类必须实现backward方法")

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs) -> Tensor:
        fn = cls(**kwargs)
        out = Tensor(fn.forward(*[t.data for t in inputs]))
        graph = active_graph()
        if graph is not None and any(t.requires_grad for t in inputs):
            out.requires_grad = True
            node = Node(op=fn.name, inputs=tuple(inputs), output=out, backward_fn=fn.backward,
                        context=kwargs)
            out.node = node
            graph.record(node)
        return out


def backward(graph: Graph, loss: Tensor, params: Optional[Iterable[Tensor]] = None) -> None:
    """
    反向传播, 梯度累加到叶子张量的 grad 上

    :param graph: 前向时记录的计算图
    :param loss: 标量损失
    :param params: 需要保证有梯度数组的参数 (不可达参数得到全零梯度)
    :raises ContractError: 损失不是标量
    """
    if loss.size != 1:
        raise ContractError(f"反向传播要求标量损失, 当前形状: {loss.shape}")

    if params is not None:
        for param in params:
            if param.grad is None:
                param.zero_grad()

    if not loss.requires_grad or loss.node is None:
        return

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        grad_out = grads.pop(id(node.output), None)
        if grad_out is None:
            continue
        input_grads = node.backward_fn(grad_out)
        for tensor, grad in zip(node.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if tensor.node is None:
                if tensor.grad is None:
                    tensor.grad = np.zeros_like(tensor.data)
                tensor.grad += grad.astype(tensor.data.dtype, copy=False)
            else:
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad
