"""
参数存储与分支绑定

存储层按存储名保存张量; 绑定表把 (分支, 逻辑名) 解析到存储名.
共享模式下两个分支的骨干逻辑名解析到同一个张量, 非共享模式下解析到各自的副本.
"""
import logging
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.stats import truncnorm

from calculation.autodiff import Tensor
from utils.custom_logger import CustomLogger
from utils.exceptions import CheckpointError, ConfigError
from utils.rng import SplittableRNG

logger = CustomLogger(name="param_store", log_level=logging.WARNING)

BRANCHES = ("technical", "aesthetic")
SHARE_MODES = ("shared", "unshared", "single")

# 参数分组, 用于参数量统计
GROUP_BACKBONE = "backbone"
GROUP_BIAS = "bias"
GROUP_FUSION = "fusion"
GROUP_HEAD = "head"
GROUP_CLASSIFIER = "classifier"


def trunc_normal(shape: Tuple[int, ...], rng: SplittableRNG, std: float = 0.02, dtype=np.float32) -> np.ndarray:
    """截断在 ±2σ 的正态分布初始化"""
    values = truncnorm.rvs(-2.0, 2.0, loc=0.0, scale=std, size=shape, random_state=rng.generator())
    return np.asarray(values, dtype=dtype).reshape(shape)


class ParamStore:
    """命名张量注册表 + 分支绑定表"""

    def __init__(self, mode: str = "shared", seed: int = 0, dtype=np.float32):
        """
        :param mode: shared / unshared / single
        :param seed: 初始化种子, 逻辑名相同的张量初始化结果相同
        :param dtype: 参数精度 (训练 float32, 梯度校验 float64)
        """
        if mode not in SHARE_MODES:
            raise ConfigError(f"无效的共享模式: {mode}, 必须是{list(SHARE_MODES)}之一")
        self.mode = mode
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self.tensors: Dict[str, Tensor] = {}
        self.groups: Dict[str, str] = {}
        self.bindings: Dict[Tuple[str, str], str] = {}

    # ------------------------------------------------------------ 注册
    def create(self, name: str, shape: Tuple[int, ...], group: str, init: str = "trunc_normal",
               init_key: Optional[str] = None) -> Tensor:
        """
        创建并注册一个参数

        :param name: 存储名
        :param shape: 形状
        :param group: 参数分组
        :param init: trunc_normal / zeros / ones
        :param init_key: 初始化随机流的键, 默认用存储名; 非共享副本传入逻辑名以保证初始化一致
        """
        if name in self.tensors:
            return self.tensors[name]
        if init == "trunc_normal":
            data = trunc_normal(shape, SplittableRNG(self.seed).split(init_key or name), dtype=self.dtype)
        elif init == "zeros":
            data = np.zeros(shape, dtype=self.dtype)
        elif init == "ones":
            data = np.ones(shape, dtype=self.dtype)
        else:
            raise ConfigError(f"未知的初始化方式: {init}")
        tensor = Tensor(data, requires_grad=True, name=name)
        self.tensors[name] = tensor
        self.groups[name] = group
        return tensor

    def bind(self, branch: str, logical: str, stored: str) -> None:
        if stored not in self.tensors:
            raise KeyError(f"绑定到不存在的参数: {stored}")
        self.bindings[(branch, logical)] = stored

    def create_bound(self, logical: str, shape: Tuple[int, ...], group: str, init: str = "trunc_normal",
                     branches: Tuple[str, ...] = BRANCHES, share: Optional[bool] = None) -> None:
        """
        按共享模式创建参数并为各分支绑定

        :param logical: 逻辑名
        :param share: True 时所有分支绑定同一张量; 默认由 mode == shared 决定
        """
        share = (self.mode == "shared") if share is None else share
        for branch in branches:
            stored = f"{group}.{logical}" if share else f"{branch}.{group}.{logical}"
            self.create(stored, shape, group, init=init, init_key=logical)
            self.bind(branch, logical, stored)

    # ------------------------------------------------------------ 查询
    def resolve(self, branch: str, logical: str) -> str:
        try:
            return self.bindings[(branch, logical)]
        except KeyError:
            raise KeyError(f"分支 {branch} 没有绑定参数 {logical}") from None

    def get(self, branch: str, logical: str) -> Tensor:
        return self.tensors[self.resolve(branch, logical)]

    def has(self, branch: str, logical: str) -> bool:
        return (branch, logical) in self.bindings

    def branches(self) -> List[str]:
        return sorted({branch for branch, _ in self.bindings})

    def parameters(self, group: Optional[str] = None) -> List[Tensor]:
        return [t for name, t in sorted(self.tensors.items()) if group is None or self.groups[name] == group]

    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(sorted(self.tensors.items()))

    def count(self, group: Optional[str] = None) -> int:
        """参数量 (按存储去重)"""
        return int(sum(t.size for t in self.parameters(group)))

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.zero_grad()

    # ------------------------------------------------------------ 状态
    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in sorted(self.tensors.items())}

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True) -> None:
        """
        按存储名载入参数

        :raises CheckpointError: strict 模式下名称或形状不一致
        """
        missing = sorted(set(self.tensors) - set(state))
        unexpected = sorted(set(state) - set(self.tensors))
        if strict and (missing or unexpected):
            raise CheckpointError(f"参数名不一致: 缺少 {missing[:5]}, 多余 {unexpected[:5]}")
        for name, value in state.items():
            if name not in self.tensors:
                continue
            target = self.tensors[name]
            if target.shape != tuple(value.shape):
                raise CheckpointError(f"参数 {name} 形状不一致: {target.shape} vs {tuple(value.shape)}")
            target.data = np.array(value, dtype=self.dtype)

    def __repr__(self) -> str:
        return f"ParamStore(mode='{self.mode}', tensors={len(self.tensors)}, params={self.count()})"
