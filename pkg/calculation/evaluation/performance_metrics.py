import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from utils.exceptions import ContractError

STATUS_OK = "ok"
STATUS_NOT_A_RESULT = "not_a_result"


@dataclass(frozen=True)
class CorrelationResult:
    """相关系数; 常数向量时 value 为 None 且 status 为 not_a_result"""
    value: Optional[float]
    status: str = STATUS_OK
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def as_float(self) -> float:
        """表格输出用: not_a_result 记为 NaN"""
        return float(self.value) if self.ok else math.nan

    def __str__(self) -> str:
        return f"{self.value:.4f}" if self.ok else STATUS_NOT_A_RESULT


class QualityMetrics:
    """Quality assessment correlation metrics"""

    VARIANCE_EPS = 1e-12

    @staticmethod
    def _validate(pred: Sequence[float], gt: Sequence[float]):
        pred = np.asarray(pred, dtype=np.float64).reshape(-1)
        gt = np.asarray(gt, dtype=np.float64).reshape(-1)
        if pred.shape != gt.shape:
            raise ContractError(f"预测与标注长度不一致: {pred.shape[0]} vs {gt.shape[0]}")
        if pred.size < 2:
            raise ContractError(f"相关系数至少需要 2 个样本, 当前: {pred.size}")
        if not (np.isfinite(pred).all() and np.isfinite(gt).all()):
            raise ContractError("分数中包含非有限值")
        return pred, gt

    @staticmethod
    def ranks(values: Sequence[float]) -> np.ndarray:
        """平均秩 (从 1 开始, 并列取平均)"""
        return rankdata(np.asarray(values, dtype=np.float64), method="average")

    @staticmethod
    def _pearson(x: np.ndarray, y: np.ndarray) -> CorrelationResult:
        xc, yc = x - x.mean(), y - y.mean()
        if xc.var() < QualityMetrics.VARIANCE_EPS or yc.var() < QualityMetrics.VARIANCE_EPS:
            return CorrelationResult(value=None, status=STATUS_NOT_A_RESULT, reason="constant vector")
        rho = float(xc @ yc) / (np.linalg.norm(xc) * np.linalg.norm(yc))
        return CorrelationResult(value=float(np.clip(rho, -1.0, 1.0)))

    @staticmethod
    def plcc(pred: Sequence[float], gt: Sequence[float]) -> CorrelationResult:
        """Pearson linear correlation (no logistic remapping)"""
        pred, gt = QualityMetrics._validate(pred, gt)
        return QualityMetrics._pearson(pred, gt)

    @staticmethod
    def srcc(pred: Sequence[float], gt: Sequence[float]) -> CorrelationResult:
        """Spearman rank correlation: Pearson of average ranks"""
        pred, gt = QualityMetrics._validate(pred, gt)
        return QualityMetrics._pearson(QualityMetrics.ranks(pred), QualityMetrics.ranks(gt))

    @staticmethod
    def evaluate(pred: Sequence[float], gt: Sequence[float]) -> Dict[str, CorrelationResult]:
        return {"srcc": QualityMetrics.srcc(pred, gt), "plcc": QualityMetrics.plcc(pred, gt)}

    @staticmethod
    def summarize(pred: Sequence[float], gt: Sequence[float], groups: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """
        分组相关系数表

        :param groups: 每个样本的分组标签; None 时只输出 all 一行
        :return: DataFrame[group, count, srcc, plcc, status]; 少于 2 个样本的组记为 not_a_result
        """
        pred = np.asarray(pred, dtype=np.float64).reshape(-1)
        gt = np.asarray(gt, dtype=np.float64).reshape(-1)
        frame = pd.DataFrame({"pred": pred, "gt": gt, "group": "all" if groups is None else list(groups)})
        rows = []
        parts = [("all", frame)] + ([] if groups is None else list(frame.groupby("group", sort=True)))
        for name, part in parts:
            if len(part) < 2:
                rows.append({"group": name, "count": len(part), "srcc": math.nan, "plcc": math.nan,
                             "status": STATUS_NOT_A_RESULT})
                continue
            metrics = QualityMetrics.evaluate(part["pred"].to_numpy(), part["gt"].to_numpy())
            status = STATUS_OK if all(m.ok for m in metrics.values()) else STATUS_NOT_A_RESULT
            rows.append({"group": name, "count": len(part), "srcc": metrics["srcc"].as_float(),
                         "plcc": metrics["plcc"].as_float(), "status": status})
        return pd.DataFrame(rows, columns=["group", "count", "srcc", "plcc", "status"])
