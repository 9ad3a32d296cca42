"""
复现实验

- overfit: 小语料上共享权重 + 交叉注意力模型应在限定轮数内把训练集 SRCC 拟合到阈值以上
- context: 在上下文相关的测试划分上比较共享与非共享骨干, 分别在有 / 无合成预训练下跑多个种子
"""
import logging
import time
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from data.synthetic import Corpus, build_corpus
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger

from .eval_tasks import EvalTasks
from .train_tasks import TrainTasks

OVERFIT_TARGET_SRCC = 0.95
OVERFIT_MAX_EPOCHS = 200
OVERFIT_CORPUS_SIZE = 64
CONTEXT_SEEDS = (0, 1, 2, 3, 4)


class ExperimentTasks:
    """复现实验任务类"""

    def __init__(self, logger: Optional[CustomLogger] = None):
        self.logger = logger or CustomLogger(name="experiment_tasks", log_level=logging.INFO)
        self.trainer = TrainTasks(logger=self.logger)
        self.evaluator = EvalTasks(logger=self.logger)

    def overfit(self,
                base: RunConfig,
                corpus: Optional[Corpus] = None,
                target: float = OVERFIT_TARGET_SRCC,
                max_epochs: int = OVERFIT_MAX_EPOCHS) -> Dict[str, Any]:
        """
        过拟合检查

        :param base: 基础配置, 强制为共享双分支 + cross_attention
        :param corpus: 训练语料, 默认按 base 生成 64 个视频
        :return: {"reached", "epochs", "train_srcc", "eval_srcc", "seconds"}
        """
        cfg = base.updated(**{"model.topology": "two_branch", "model.shared": True,
                              "model.fusion": "cross_attention", "optimizer.epochs": max_epochs})
        if corpus is None:
            corpus = build_corpus(cfg.data.corpus.model_copy(update={"train_size": OVERFIT_CORPUS_SIZE}), "train")
        start = time.perf_counter()
        result = self.trainer.train(cfg, corpus, stop_at_srcc=target)
        seconds = time.perf_counter() - start
        # 用检查点重新评估训练集, 应复现训练结束时的 SRCC
        evaluation = self.evaluator.evaluate(result.checkpoint, corpus)
        train_srcc = result.checkpoint.extra["train_srcc"]
        summary = {
            "reached": train_srcc is not None and train_srcc >= target,
            "epochs": result.checkpoint.extra["epochs"],
            "train_srcc": train_srcc,
            "eval_srcc": evaluation.report.srcc,
            "seconds": seconds,
        }
        self.logger.info(f"[overfit] {summary}")
        return summary

    def context(self,
                base: RunConfig,
                train_corpus: Corpus,
                test_corpus: Corpus,
                seeds: Sequence[int] = CONTEXT_SEEDS,
                pretraining: Sequence[bool] = (False, True)) -> pd.DataFrame:
        """
        共享 / 非共享骨干在上下文测试划分上的 SRCC

        :return: DataFrame[seed, pretrained, shared, srcc, plcc, status]
        """
        rows = []
        for pretrained in pretraining:
            for seed in seeds:
                for shared in (False, True):
                    cfg = base.updated(**{"seed": seed, "model.topology": "two_branch", "model.shared": shared,
                                          "model.fusion": "cross_attention", "pretrain.enabled": pretrained})
                    result = self.trainer.train(cfg, train_corpus)
                    report = self.evaluator.evaluate_model(result.model, cfg, test_corpus).report
                    rows.append({"seed": seed, "pretrained": pretrained, "shared": shared, "srcc": report.srcc,
                                 "plcc": report.plcc, "status": report.status})
                    self.logger.info(f"[context] seed={seed} pretrained={pretrained} shared={shared}: "
                                     f"srcc={report.srcc}")
        return pd.DataFrame(rows, columns=["seed", "pretrained", "shared", "srcc", "plcc", "status"])

    @staticmethod
    def context_summary(table: pd.DataFrame) -> Dict[str, Any]:
        """
        共享相对非共享的 SRCC 差

        :return: 每个预训练设置下共享胜出的种子数与平均差值, 以及两个方向性判断
        """
        summary: Dict[str, Any] = {}
        for pretrained, part in table.groupby("pretrained", sort=True):
            pivot = part.pivot(index="seed", columns="shared", values="srcc").astype(float)
            gap = (pivot[True] - pivot[False]).dropna()
            key = "pretrained" if pretrained else "scratch"
            summary[f"{key}_seeds"] = int(len(gap))
            summary[f"{key}_wins"] = int((gap >= 0).sum())
            summary[f"{key}_mean_gap"] = float(gap.mean()) if len(gap) else float("nan")
        if "scratch_wins" in summary:
            summary["shared_wins_majority"] = 2 * summary["scratch_wins"] > summary["scratch_seeds"]
        if "scratch_mean_gap" in summary and "pretrained_mean_gap" in summary:
            summary["gap_larger_without_pretraining"] = bool(
                np.nan_to_num(summary["scratch_mean_gap"], nan=-np.inf)
                >= np.nan_to_num(summary["pretrained_mean_gap"], nan=np.inf))
        return summary
