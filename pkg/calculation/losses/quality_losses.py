"""
质量回归损失

- mono_loss: 有序对上的排序铰链损失
- plcc_loss: (1 - PLCC) / 2
- combined_loss: λ * mono + plcc
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from calculation.autodiff import Function, Tensor, ops
from config import get_settings
from utils.exceptions import ContractError

# 方差低于该阈值视为常数向量
VARIANCE_EPS = 1e-8


@dataclass
class ScoreBatch:
    """一批预测分数与标注分数"""
    s_pred: Tensor      # [B]
    s_gt: np.ndarray    # [B]

    def __post_init__(self):
        self.s_gt = np.asarray(self.s_gt, dtype=np.float64).reshape(-1)
        if self.s_pred.data.ndim != 1:
            raise ContractError(f"预测分数必须是一维, 当前形状: {self.s_pred.shape}")
        if self.s_pred.shape[0] != self.s_gt.shape[0]:
            raise ContractError(f"预测与标注长度不一致: {self.s_pred.shape[0]} vs {self.s_gt.shape[0]}")
        if self.size < 2:
            raise ContractError(f"批大小至少为 2, 当前值: {self.size}")
        if not (np.isfinite(self.s_pred.data).all() and np.isfinite(self.s_gt).all()):
            raise ContractError("分数中包含非有限值")

    @property
    def size(self) -> int:
        return int(self.s_gt.shape[0])


class MonotonicityLoss(Function):
    """
    sum_{i != j} max(0, (p_i - p_j) * sgn(g_j - g_i))

    sgn(0) = 0; 铰链拐点处取次梯度 0.
    """
    name = "mono_loss"

    def __init__(self, gt: np.ndarray):
        self.gt = gt

    def forward(self, pred):
        sign = np.sign(self.gt[None, :] - self.gt[:, None])          # sign[i, j] = sgn(g_j - g_i)
        margin = (pred[:, None] - pred[None, :]) * sign
        self.weight = np.where(margin > 0, sign, 0.0)
        return np.asarray(np.maximum(margin, 0.0).sum(), dtype=pred.dtype)

    def backward(self, grad):
        d_pred = self.weight.sum(axis=1) - self.weight.sum(axis=0)
        return (grad * d_pred,)


class PLCCLoss(Function):
    """(1 - ρ) / 2, 任一向量方差过小时为 0.5 且梯度为 0"""
    name = "plcc_loss"

    def __init__(self, gt: np.ndarray):
        self.gt = gt

    def forward(self, pred):
        p = pred.astype(np.float64) - pred.mean()
        g = self.gt - self.gt.mean()
        self.degenerate = p.var() < VARIANCE_EPS or g.var() < VARIANCE_EPS
        if self.degenerate:
            return np.asarray(0.5, dtype=pred.dtype)
        self.p, self.g = p, g
        self.p_norm, self.g_norm = np.linalg.norm(p), np.linalg.norm(g)
        self.rho = float(p @ g) / (self.p_norm * self.g_norm)
        self.dtype = pred.dtype
        return np.asarray(0.5 * (1.0 - self.rho), dtype=pred.dtype)

    def backward(self, grad):
        if self.degenerate:
            return (np.zeros_like(self.gt, dtype=grad.dtype),)
        d_rho = self.g / (self.p_norm * self.g_norm) - self.rho * self.p / self.p_norm ** 2
        return ((-0.5 * grad * d_rho).astype(self.dtype),)


def mono_loss(batch: ScoreBatch) -> Tensor:
    """排序单调性损失 (有序对, 不做对数归一化)"""
    return MonotonicityLoss.apply(batch.s_pred, gt=batch.s_gt)


def plcc_loss(batch: ScoreBatch) -> Tensor:
    """线性相关损失"""
    return PLCCLoss.apply(batch.s_pred, gt=batch.s_gt)


def combined_loss_terms(batch: ScoreBatch, lam: Optional[float] = None) -> Tuple[Tensor, Tensor, Tensor]:
    """
    :param lam: 单调性损失权重, 默认取配置 LOSS_LAMBDA
    :return: (total, mono, plcc)
    :raises ContractError: lam < 0
    """
    lam = get_settings().LOSS_LAMBDA if lam is None else float(lam)
    if lam < 0:
        raise ContractError(f"损失权重 λ 必须非负, 当前值: {lam}")
    mono = mono_loss(batch)
    plcc = plcc_loss(batch)
    return ops.add(ops.scale(mono, lam), plcc), mono, plcc


def combined_loss(batch: ScoreBatch, lam: Optional[float] = None) -> Tensor:
    """λ * mono + plcc"""
    return combined_loss_terms(batch, lam)[0]
