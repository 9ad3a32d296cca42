"""
评估任务: 检查点 + 语料 -> SRCC / PLCC, 分组指标与逐视频预测
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from calculation.evaluation import QualityMetrics
from calculation.model.vqa_model import INFERENCE_MODES, VQAModel
from data.processor.data_validator import DataValidator
from data.storage.checkpoint_store import Checkpoint, load_checkpoint
from data.synthetic import Corpus
from service.schemas.report import EvaluationReport, GroupMetrics
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger
from utils.exceptions import ConfigError

from .common import build_arrays, iterate_batches, model_from_checkpoint, prepare_all, run_tag

PREDICTION_COLUMNS = ["id", "label", "pred", "class", "kind", "severity", "resolution_group", "congruent"]


@dataclass
class EvaluationResult:
    report: EvaluationReport
    predictions: pd.DataFrame


class EvalTasks:
    """评估任务类"""

    def __init__(self, logger: Optional[CustomLogger] = None):
        self.logger = logger or CustomLogger(name="eval_tasks", log_level=logging.INFO)

    def evaluate(self,
                 checkpoint: Union[Checkpoint, Path, str],
                 corpus: Corpus,
                 mode: str = "full") -> EvaluationResult:
        """
        评估检查点

        :param checkpoint: Checkpoint 或检查点目录
        :param corpus: 评估语料
        :param mode: full / technical_only / aesthetic_only
        :return: EvaluationResult; 常数预测时 srcc / plcc 为 None, status 为 not_a_result
        :raises ConfigError: 未知模式, 或单分支模型请求另一分支
        """
        if mode not in INFERENCE_MODES:
            raise ConfigError(f"推理模式必须是{list(INFERENCE_MODES)}之一, 当前值: {mode}")
        if not isinstance(checkpoint, Checkpoint):
            checkpoint = load_checkpoint(Path(checkpoint))
        model, cfg = model_from_checkpoint(checkpoint)
        return self.evaluate_model(model, cfg, corpus, mode)

    def evaluate_model(self, model: VQAModel, cfg: RunConfig, corpus: Corpus, mode: str = "full") -> EvaluationResult:
        tag = run_tag(cfg)
        self.logger.info(f"[{tag}] 开始评估 {cfg.model.label} ({mode}): {len(corpus)} 个视频")
        arrays = build_arrays(prepare_all(corpus, cfg))

        scores, elapsed = [], 0.0
        for index in iterate_batches(len(corpus), cfg.optimizer.batch_size):
            start = time.perf_counter()
            batch = {branch: values[index] for branch, values in arrays.items()}
            scores.append(model.infer(batch, mode=mode).data.astype(np.float64))
            elapsed += time.perf_counter() - start
        pred = np.concatenate(scores) if scores else np.zeros(0)

        manifest = corpus.manifest()
        predictions = pd.DataFrame({
            "id": corpus.ids,
            "label": corpus.labels,
            "pred": pred,
            "class": manifest["class"].to_numpy(),
            "kind": manifest["kind"].to_numpy(),
            "severity": manifest["severity"].to_numpy(),
            "resolution_group": manifest["resolution_group"].to_numpy(),
            "congruent": manifest["congruent"].to_numpy(),
        }, columns=PREDICTION_COLUMNS)

        metrics = QualityMetrics.evaluate(pred, corpus.labels)
        groups = self._group_metrics(predictions)
        status = "ok" if all(m.ok for m in metrics.values()) else "not_a_result"
        reason = "; ".join(sorted({m.reason for m in metrics.values() if not m.ok}))
        if status != "ok":
            self.logger.warning(f"[{tag}] 评估指标无结果: {reason}")
        DataValidator.check_outliers(pred)

        report = EvaluationReport(mode=mode, count=len(corpus), srcc=metrics["srcc"].value,
                                  plcc=metrics["plcc"].value, status=status, reason=reason, groups=groups,
                                  mean_inference_seconds=elapsed / max(1, len(corpus)), seed=cfg.seed,
                                  config_hash=cfg.config_hash())
        self.logger.info(f"[{tag}] 评估完成: srcc={metrics['srcc']}, plcc={metrics['plcc']}, "
                         f"{report.mean_inference_seconds * 1000:.1f} ms/视频")
        return EvaluationResult(report=report, predictions=predictions)

    @staticmethod
    def _group_metrics(predictions: pd.DataFrame) -> list:
        """分辨率分组与相符 / 不相符分组的相关系数"""
        rows = []
        for column, prefix in (("resolution_group", "resolution"), ("congruent", "congruent")):
            table = QualityMetrics.summarize(predictions["pred"], predictions["label"],
                                             predictions[column].astype(str).tolist())
            for record in table.to_dict("records"):
                if record["group"] == "all":
                    continue
                rows.append(GroupMetrics(group=f"{prefix}={record['group']}", count=int(record["count"]),
                                         srcc=None if pd.isna(record["srcc"]) else float(record["srcc"]),
                                         plcc=None if pd.isna(record["plcc"]) else float(record["plcc"]),
                                         status=record["status"]))
        return rows

    def save(self, result: EvaluationResult, out_dir: Path) -> Dict[str, str]:
        """写出 predictions_<mode>.csv 与 report_<mode>.json"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        mode = result.report.mode
        csv_path = out_dir / f"predictions_{mode}.csv"
        report_path = out_dir / f"report_{mode}.json"
        result.predictions.to_csv(csv_path, index=False)
        report_path.write_text(result.report.model_dump_json(indent=2), encoding="utf-8")
        self.logger.info(f"评估结果已写出到 {out_dir}")
        return {"predictions": str(csv_path), "report": str(report_path)}
