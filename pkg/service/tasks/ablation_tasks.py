"""
消融实验任务

对 {单技术分支, 单美学分支, 非共享双分支, 共享双分支} x {四种融合} x {有 / 无合成预训练}
逐一训练并在测试语料上评估; 双分支模型额外给出只用单个分支推理的行.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from calculation.evaluation import QualityMetrics
from calculation.model.fusion import FUSION_MODES
from data.synthetic import Corpus
from service.schemas.report import AblationRow
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger

from .eval_tasks import EvalTasks
from .train_tasks import TrainTasks

ABLATION_COLUMNS = list(AblationRow.model_fields)


def ablation_configs(base: RunConfig,
                     fusions: Sequence[str] = FUSION_MODES,
                     sharing: Sequence[bool] = (False, True),
                     pretraining: Sequence[bool] = (False, True),
                     include_single: bool = True) -> Iterator[Tuple[RunConfig, bool]]:
    """
    枚举消融配置

    :return: (配置, 是否预训练) 迭代器
    """
    for pretrained in pretraining:
        variants: List[Dict[str, object]] = []
        if include_single:
            variants += [{"model.topology": "single_technical"}, {"model.topology": "single_aesthetic"}]
        for shared in sharing:
            for fusion in fusions:
                variants.append({"model.topology": "two_branch", "model.shared": shared, "model.fusion": fusion})
        for variant in variants:
            yield base.updated(**variant, **{"pretrain.enabled": pretrained}), pretrained


class AblationTasks:
    """消融实验任务类"""

    def __init__(self, logger: Optional[CustomLogger] = None):
        self.logger = logger or CustomLogger(name="ablation_tasks", log_level=logging.INFO)
        self.trainer = TrainTasks(logger=self.logger)
        self.evaluator = EvalTasks(logger=self.logger)

    def ablate(self,
               base: RunConfig,
               train_corpus: Corpus,
               test_corpus: Corpus,
               fusions: Sequence[str] = FUSION_MODES,
               sharing: Sequence[bool] = (False, True),
               pretraining: Sequence[bool] = (False, True),
               include_single: bool = True,
               branch_only: bool = True) -> pd.DataFrame:
        """
        运行消融实验

        :param base: 基础配置, 每行只改变拓扑 / 共享 / 融合 / 预训练
        :param train_corpus: 训练语料
        :param test_corpus: 评估语料 (相符组合子集额外给出 context_srcc)
        :param branch_only: 双分支模型是否追加单分支推理行
        :return: DataFrame, 列见 AblationRow
        """
        congruent = test_corpus.manifest()["congruent"].to_numpy(dtype=bool) if len(test_corpus) else np.zeros(0, bool)
        rows: List[AblationRow] = []
        for cfg, pretrained in ablation_configs(base, fusions, sharing, pretraining, include_single):
            self.logger.info(f"[ablate] {cfg.model.label} (pretrained={pretrained})")
            try:
                result = self.trainer.train(cfg, train_corpus)
            except Exception as e:
                self.logger.error(f"[ablate] 训练 {cfg.model.label} 失败: {str(e)}", exc_info=True)
                raise
            modes = ["full"]
            if branch_only and cfg.model.topology == "two_branch":
                modes += ["technical_only", "aesthetic_only"]
            for mode in modes:
                evaluation = self.evaluator.evaluate_model(result.model, cfg, test_corpus, mode)
                summary = result.model.param_summary()
                single = cfg.model.topology != "two_branch"
                rows.append(AblationRow(
                    row=cfg.model.label if mode == "full" else f"{cfg.model.label}/{mode}",
                    topology=cfg.model.topology,
                    shared=None if single else cfg.model.shared,
                    fusion=None if single else cfg.model.fusion,
                    pretrained=pretrained,
                    inference=mode,
                    srcc=evaluation.report.srcc,
                    plcc=evaluation.report.plcc,
                    context_srcc=self._subset_srcc(evaluation.predictions, congruent),
                    status=evaluation.report.status,
                    params=summary["total"],
                    fusion_params=summary["fusion_head"],
                    seed=cfg.seed,
                    config_hash=cfg.config_hash(),
                ))
        table = pd.DataFrame([row.model_dump() for row in rows], columns=ABLATION_COLUMNS)
        self.logger.info(f"[ablate] 完成 {len(table)} 行")
        return table

    @staticmethod
    def _subset_srcc(predictions: pd.DataFrame, mask: np.ndarray) -> Optional[float]:
        if mask.sum() < 2:
            return None
        return QualityMetrics.srcc(predictions["pred"].to_numpy()[mask], predictions["label"].to_numpy()[mask]).value

    def save(self, table: pd.DataFrame, out_dir: Path) -> Dict[str, str]:
        """写出 ablation.csv 与 ablation.json (records)"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out_dir / "ablation.csv", out_dir / "ablation.json"
        table.to_csv(csv_path, index=False)
        records = [AblationRow.model_validate(record).model_dump(mode="json")
                   for record in table.astype(object).where(table.notna(), None).to_dict("records")]
        json_path.write_text(json.dumps(records, indent=2), encoding="utf-8")
        self.logger.info(f"消融结果已写出到 {out_dir}")
        return {"csv": str(csv_path), "json": str(json_path)}
