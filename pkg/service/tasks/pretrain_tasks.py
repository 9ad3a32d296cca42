"""
合成语义预训练

在美学输入上用场景类别做线性探针分类, 训练单分支骨干.
导出的权重可通过 load_pretrained_backbone 复制到两个分支.
"""
import logging
import time
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd

from calculation.autodiff import Graph, backward, ops
from calculation.losses import scene_classification_loss
from calculation.model.backbone import Backbone, build_single, export_backbone_weights
from calculation.model.param_store import GROUP_CLASSIFIER
from calculation.optim import AdamW
from data.sampler.fragment_sampler import normalize_clip
from data.synthetic import SCENE_CLASSES, Corpus
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger

from .common import iterate_batches, prepare_all, run_tag, shuffled_order


@dataclass
class PretrainResult:
    weights: Dict[str, np.ndarray]
    history: pd.DataFrame


class PretrainTasks:
    """场景分类预训练任务"""

    def __init__(self, logger: Optional[CustomLogger] = None):
        self.logger = logger or CustomLogger(name="pretrain_tasks", log_level=logging.INFO)

    def pretrain(self, cfg: RunConfig, corpus: Corpus) -> PretrainResult:
        """
        :param cfg: 运行配置 (使用 model.backbone, sampler, pretrain, optimizer.batch_size)
        :param corpus: 提供场景类别的语料
        :return: 骨干与 rpb 权重 (逻辑名), 每轮 loss / accuracy
        """
        tag = run_tag(cfg)
        backbone_cfg = cfg.model.backbone
        store = build_single(backbone_cfg, "aesthetic", seed=cfg.seed)
        classifier_w = store.create("classifier.weight", (backbone_cfg.out_channels, len(SCENE_CLASSES)),
                                    GROUP_CLASSIFIER)
        classifier_b = store.create("classifier.bias", (len(SCENE_CLASSES),), GROUP_CLASSIFIER, init="zeros")
        backbone = Backbone(backbone_cfg)

        inputs = prepare_all(corpus, cfg)
        clips = np.stack([normalize_clip(item.aesthetic.tensor) for item in inputs])
        classes = np.array([SCENE_CLASSES.index(item.scene_class) for item in corpus], dtype=np.int64)
        params = store.parameters()
        optimizer = AdamW(params, lr=cfg.pretrain.lr, betas=cfg.optimizer.betas, eps=cfg.optimizer.eps,
                          weight_decay=cfg.optimizer.weight_decay)

        self.logger.info(f"[{tag}] 开始预训练: {len(corpus)} 个视频, {cfg.pretrain.epochs} 轮")
        rows = []
        for epoch in range(1, cfg.pretrain.epochs + 1):
            start = time.perf_counter()
            losses, correct = [], 0
            order = shuffled_order(cfg.seed, epoch, len(corpus), stream="pretrain")
            for index in iterate_batches(len(corpus), cfg.optimizer.batch_size, order):
                store.zero_grad()
                with Graph() as graph:
                    feature = backbone.forward(clips[index], store, "aesthetic").tokens
                    pooled = ops.mean(ops.reshape(feature, (len(index), -1, feature.shape[-1])), axis=1)
                    logits = ops.linear(pooled, classifier_w, classifier_b)
                    loss = scene_classification_loss(logits, classes[index])
                backward(graph, loss, params)
                optimizer.step()
                losses.append(loss.item())
                correct += int((logits.data.argmax(axis=1) == classes[index]).sum())
            rows.append({"epoch": epoch, "loss": float(np.mean(losses)), "accuracy": correct / len(corpus),
                         "seconds": time.perf_counter() - start})
            self.logger.info(f"[{tag}] 预训练 epoch {epoch}: loss={rows[-1]['loss']:.4f}, "
                             f"acc={rows[-1]['accuracy']:.3f}")

        return PretrainResult(weights=export_backbone_weights(store, backbone_cfg, "aesthetic"),
                              history=pd.DataFrame(rows, columns=["epoch", "loss", "accuracy", "seconds"]))
