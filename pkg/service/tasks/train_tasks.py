"""
质量回归训练任务

train: 从头训练 (可选先做合成预训练)
finetune: 从已有检查点的参数开始训练
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from calculation.autodiff import Graph, backward
from calculation.evaluation import QualityMetrics, QualityVisualization
from calculation.losses import ScoreBatch, combined_loss_terms
from calculation.model.backbone import load_pretrained_backbone
from calculation.model.vqa_model import VQAModel
from calculation.optim import AdamW
from data.storage.checkpoint_store import Checkpoint, load_checkpoint, save_checkpoint
from data.synthetic import Corpus
from service.schemas.report import EpochRecord
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger
from utils.exceptions import ConfigError, ContractError

from .common import (build_arrays, checkpoint_from_model, iterate_batches, load_initial_weights, predict,
                     prepare_all, run_tag, shuffled_order)
from .pretrain_tasks import PretrainTasks

EPOCH_LOG_COLUMNS = list(EpochRecord.model_fields)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    epoch_log: pd.DataFrame
    model: VQAModel
    predictions: np.ndarray
    pretrain_log: Optional[pd.DataFrame] = None

    @property
    def final_srcc(self) -> Optional[float]:
        return self.checkpoint.extra.get("train_srcc")


class TrainTasks:
    """训练任务类"""

    def __init__(self, logger: Optional[CustomLogger] = None):
        """
        :param logger: 日志实例, None则自动创建
        """
        self.logger = logger or CustomLogger(name="train_tasks", log_level=logging.INFO)

    def train(self,
              cfg: RunConfig,
              corpus: Corpus,
              init: Optional[Checkpoint] = None,
              stop_at_srcc: Optional[float] = None) -> TrainResult:
        """
        训练质量模型

        :param cfg: 运行配置
        :param corpus: 训练语料
        :param init: 初始参数检查点 (迁移训练), 与预训练互斥, 优先使用
        :param stop_at_srcc: 训练集 SRCC 达到该值后提前结束
        :return: TrainResult, 检查点的 extra 记录最终训练集 SRCC / PLCC
        :raises ConfigError: batch_size < 2
        :raises ContractError: 语料少于 2 个视频
        """
        tag = run_tag(cfg)
        if cfg.optimizer.batch_size < 2:
            raise ConfigError(f"batch_size 至少为 2 (排序损失需要样本对), 当前值: {cfg.optimizer.batch_size}")
        if len(corpus) < 2:
            raise ContractError(f"训练语料至少需要 2 个视频, 当前: {len(corpus)}")

        model = VQAModel(cfg.model, cfg.sampler, seed=cfg.seed)
        pretrain_log = None
        if init is not None:
            load_initial_weights(model, init)
        elif cfg.pretrain.enabled and cfg.pretrain.epochs > 0:
            result = PretrainTasks(logger=self.logger).pretrain(cfg, corpus)
            load_pretrained_backbone(model.store, cfg.model.backbone, result.weights)
            pretrain_log = result.history

        self.logger.info(f"[{tag}] 开始训练 {cfg.model.label}: {len(corpus)} 个视频, "
                         f"{cfg.optimizer.epochs} 轮, 参数 {model.param_count()}")
        arrays = build_arrays(prepare_all(corpus, cfg))
        labels = corpus.labels
        opt = cfg.optimizer
        params = model.parameters()
        optimizer = AdamW(params, lr=opt.lr, betas=opt.betas, eps=opt.eps, weight_decay=opt.weight_decay)

        records: List[EpochRecord] = []
        predictions = np.zeros(len(corpus))
        for epoch in range(1, opt.epochs + 1):
            start = time.perf_counter()
            totals, monos, plccs = [], [], []
            for step, index in enumerate(iterate_batches(len(corpus), opt.batch_size,
                                                         shuffled_order(cfg.seed, epoch, len(corpus)))):
                model.store.zero_grad()
                with Graph() as graph:
                    output = model.forward({branch: values[index] for branch, values in arrays.items()})
                    total, mono, plcc = combined_loss_terms(ScoreBatch(output.score, labels[index]), cfg.lam)
                backward(graph, total, params)
                optimizer.step()
                totals.append(total.item())
                monos.append(mono.item())
                plccs.append(plcc.item())
                self.logger.debug(f"[{tag}] epoch {epoch} step {step}: loss={totals[-1]:.4f}")

            predictions = predict(model, arrays, opt.batch_size)
            metrics = QualityMetrics.evaluate(predictions, labels)
            record = EpochRecord(epoch=epoch, loss=float(np.mean(totals)), mono=float(np.mean(monos)),
                                 plcc_loss=float(np.mean(plccs)), train_srcc=metrics["srcc"].value,
                                 train_plcc=metrics["plcc"].value, seconds=time.perf_counter() - start)
            records.append(record)
            if not metrics["srcc"].ok:
                self.logger.warning(f"[{tag}] epoch {epoch}: 训练集 SRCC 无结果 ({metrics['srcc'].reason})")
            self.logger.info(f"[{tag}] epoch {epoch}: loss={record.loss:.4f}, mono={record.mono:.4f}, "
                             f"plcc={record.plcc_loss:.4f}, train_srcc={metrics['srcc']}, "
                             f"train_plcc={metrics['plcc']}")
            if stop_at_srcc is not None and metrics["srcc"].ok and metrics["srcc"].value >= stop_at_srcc:
                self.logger.info(f"[{tag}] 训练集 SRCC 达到 {stop_at_srcc}, 在第 {epoch} 轮结束")
                break

        if not records:
            predictions = predict(model, arrays, opt.batch_size)
        final = QualityMetrics.evaluate(predictions, labels)
        extra: Dict[str, Any] = {
            "epochs": len(records),
            "train_srcc": final["srcc"].value,
            "train_plcc": final["plcc"].value,
            "params": model.param_summary(),
            "config_hash": cfg.config_hash(),
            "initialized_from_checkpoint": init is not None,
            "pretrained": pretrain_log is not None,
        }
        epoch_log = pd.DataFrame([r.model_dump() for r in records], columns=EPOCH_LOG_COLUMNS)
        self.logger.info(f"[{tag}] 训练完成: train_srcc={final['srcc']}, train_plcc={final['plcc']}")
        return TrainResult(checkpoint=checkpoint_from_model(model, cfg, extra), epoch_log=epoch_log, model=model,
                           predictions=predictions, pretrain_log=pretrain_log)

    def finetune(self, checkpoint_dir: Path, cfg: RunConfig, corpus: Corpus) -> TrainResult:
        """从检查点目录载入初始参数后训练"""
        return self.train(cfg, corpus, init=load_checkpoint(checkpoint_dir))

    def save(self, result: TrainResult, cfg: RunConfig, out_dir: Path, plot: bool = False) -> Dict[str, str]:
        """
        写出训练产物: checkpoint/, epoch_log.csv, run_config.json, 可选 training_curve.png

        :return: 产物名 -> 路径
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = {
            "checkpoint": str(save_checkpoint(out_dir / "checkpoint", result.checkpoint).parent),
            "run_config": str(cfg.to_file(out_dir / "run_config.json")),
        }
        result.epoch_log.to_csv(out_dir / "epoch_log.csv", index=False)
        outputs["epoch_log"] = str(out_dir / "epoch_log.csv")
        if result.pretrain_log is not None:
            result.pretrain_log.to_csv(out_dir / "pretrain_log.csv", index=False)
            outputs["pretrain_log"] = str(out_dir / "pretrain_log.csv")
        if plot and not result.epoch_log.empty:
            figure_path = out_dir / "training_curve.png"
            try:
                QualityVisualization.plot_training_curve(result.epoch_log, title=cfg.model.label,
                                                         save_path=str(figure_path))
                outputs["figure"] = str(figure_path)
            except Exception as e:
                self.logger.error(f"绘制训练曲线失败: {str(e)}", exc_info=True)
        self.logger.info(f"[{run_tag(cfg)}] 训练产物已写出到 {out_dir}")
        return outputs
