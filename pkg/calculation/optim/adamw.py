"""AdamW: Adam 更新 + 解耦权重衰减"""
from typing import List, Sequence

import numpy as np

from calculation.autodiff import Tensor
from utils.exceptions import ConfigError


class AdamW:
    """Adam optimizer with decoupled weight decay"""

    def __init__(self,
                 parameters: Sequence[Tensor],
                 lr: float = 1e-3,
                 betas: Sequence[float] = (0.9, 0.999),
                 eps: float = 1e-8,
                 weight_decay: float = 1e-4):
        """
        :param parameters: 叶子参数
        :param lr: 学习率, 0 时参数保持不变
        :param betas: 一阶 / 二阶矩衰减系数
        :param eps: 数值稳定项
        :param weight_decay: 解耦权重衰减系数
        """
        if lr < 0 or eps <= 0 or weight_decay < 0:
            raise ConfigError(f"无效的优化器参数: lr={lr}, eps={eps}, weight_decay={weight_decay}")
        if len(betas) != 2 or not all(0.0 <= b < 1.0 for b in betas):
            raise ConfigError(f"betas 必须是 [0, 1) 内的两个数: {betas}")
        self.parameters: List[Tensor] = list(parameters)
        self.lr = float(lr)
        self.beta1, self.beta2 = float(betas[0]), float(betas[1])
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.parameters]
        self.v = [np.zeros_like(p.data) for p in self.parameters]

    def step(self) -> None:
        """用各参数的 grad 做一步更新 (grad 为 None 的参数跳过)"""
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for i, param in enumerate(self.parameters):
            grad = param.grad
            if grad is None:
                continue
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[i] / correction1
            v_hat = self.v[i] / correction2
            update = self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * param.data)
            param.data = (param.data - update).astype(param.data.dtype, copy=False)

    def zero_grad(self) -> None:
        for param in self.parameters:
            param.zero_grad()
