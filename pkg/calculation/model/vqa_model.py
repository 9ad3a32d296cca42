"""
端到端质量评价模型: 采样 -> 骨干 -> 融合 -> 分数
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator

from calculation.autodiff import Tensor
from data.sampler.fragment_sampler import (AestheticClip, FragmentClip, SamplerConfig, normalize_clip,
                                           resize_aesthetic, sample_fragment)
from data.video import RawVideo
from utils.custom_logger import CustomLogger
from utils.exceptions import ConfigError
from utils.rng import SplittableRNG

from .backbone import Backbone, BackboneConfig, FeatureMap, build_siamese, build_single
from .fusion import (FUSION_MODES, FusionOutput, FusionParams, branch_only_score, extra_parameter_count,
                     fuse_maps, register_fusion, single_branch_output)
from .param_store import GROUP_BACKBONE, GROUP_BIAS

logger = CustomLogger(name="vqa_model", log_level=logging.WARNING)

TOPOLOGIES = ("two_branch", "single_technical", "single_aesthetic")
INFERENCE_MODES = ("full", "technical_only", "aesthetic_only")


class ModelConfig(BaseModel):
    """模型结构"""
    backbone: BackboneConfig = Field(default_factory=BackboneConfig.toy)
    fusion: str = Field("cross_attention", description="score / concat / self_attention / cross_attention")
    topology: str = Field("two_branch", description="two_branch / single_technical / single_aesthetic")
    shared: bool = Field(True, description="双分支时骨干是否共享")

    @field_validator("fusion")
    @classmethod
    def validate_fusion(cls, v: str) -> str:
        if v not in FUSION_MODES:
            raise ValueError(f"融合方式必须是{list(FUSION_MODES)}之一")
        return v

    @field_validator("topology")
    @classmethod
    def validate_topology(cls, v: str) -> str:
        if v not in TOPOLOGIES:
            raise ValueError(f"拓扑必须是{list(TOPOLOGIES)}之一")
        return v

    @property
    def branches(self) -> tuple:
        if self.topology == "single_technical":
            return ("technical",)
        if self.topology == "single_aesthetic":
            return ("aesthetic",)
        return ("technical", "aesthetic")

    @property
    def label(self) -> str:
        """消融表中的行名"""
        if self.topology != "two_branch":
            return self.topology
        return f"{'shared' if self.shared else 'unshared'}/{self.fusion}"


@dataclass
class VideoInputs:
    """一个视频的两路网络输入 (同一组帧)"""
    video_id: str
    fragment: FragmentClip
    aesthetic: AestheticClip


def video_sampler_seed(run_seed: int, video_id: str) -> int:
    """每个视频固定的采样种子"""
    return int(SplittableRNG(run_seed, name="sampler").split(video_id).integers(0, 2 ** 63 - 1))


def prepare_inputs(video: RawVideo, sampler: SamplerConfig, run_seed: Optional[int] = None) -> VideoInputs:
    """
    对视频做片段采样与美学缩放

    :param run_seed: 给定时按 (run_seed, 视频 id) 派生采样种子, 否则使用 sampler.seed
    """
    cfg = sampler if run_seed is None else sampler.with_seed(video_sampler_seed(run_seed, video.id))
    return VideoInputs(video_id=video.id,
                       fragment=sample_fragment(video, cfg),
                       aesthetic=resize_aesthetic(video, cfg.side, cfg))


def stack_inputs(items: Sequence[VideoInputs], dtype=np.float32) -> Dict[str, np.ndarray]:
    """按分支堆叠并归一化"""
    return {
        "technical": np.stack([normalize_clip(item.fragment.tensor, dtype) for item in items]),
        "aesthetic": np.stack([normalize_clip(item.aesthetic.tensor, dtype) for item in items]),
    }


class VQAModel:
    """参数存储 + 骨干 + 融合"""

    def __init__(self, cfg: ModelConfig, sampler: SamplerConfig, seed: int = 0, dtype=np.float32):
        """
        :param cfg: 模型结构
        :param sampler: 片段采样参数 (技术分支门控偏置依赖其布局)
        :param seed: 参数初始化种子
        :param dtype: 参数精度
        """
        self.cfg = cfg
        self.sampler = sampler
        self.seed = seed
        if cfg.topology == "two_branch":
            self.store = build_siamese(cfg.backbone, "shared" if cfg.shared else "unshared", seed, dtype)
        else:
            self.store = build_single(cfg.backbone, cfg.branches[0], seed, dtype)
        register_fusion(self.store, cfg.fusion, cfg.backbone.out_channels, cfg.branches)
        self.backbone = Backbone(cfg.backbone, sampler)
        self.params = FusionParams(store=self.store, heads=cfg.backbone.final_heads)
        logger.debug(f"构建模型 {cfg.label}: {self.store}")

    @property
    def branches(self) -> tuple:
        return self.cfg.branches

    def parameters(self) -> List[Tensor]:
        return self.store.parameters()

    def param_count(self) -> int:
        return self.store.count()

    def param_summary(self) -> Dict[str, int]:
        return {
            "backbone": self.store.count(GROUP_BACKBONE),
            "position_bias": self.store.count(GROUP_BIAS),
            "fusion_head": extra_parameter_count(self.store),
            "total": self.store.count(),
        }

    def features(self, batch: Dict[str, np.ndarray]) -> Dict[str, FeatureMap]:
        return {branch: self.backbone.forward(batch[branch], self.store, branch) for branch in self.branches}

    def forward(self, batch: Dict[str, np.ndarray]) -> FusionOutput:
        """
        :param batch: {"technical": [B, Tc, S, S, 3], "aesthetic": [B, Tc, S, S, 3]} 归一化输入
        :return: FusionOutput, score [B]
        """
        feats = self.features(batch)
        if len(self.branches) == 1:
            return single_branch_output(feats[self.branches[0]], self.params)
        return fuse_maps(feats["technical"], feats["aesthetic"], self.cfg.fusion, self.params)

    __call__ = forward

    def infer(self, batch: Dict[str, np.ndarray], mode: str = "full") -> Tensor:
        """
        推理分数

        :param mode: full / technical_only / aesthetic_only
        :raises ConfigError: 单分支拓扑下请求另一分支
        """
        if mode not in INFERENCE_MODES:
            raise ConfigError(f"推理模式必须是{list(INFERENCE_MODES)}之一")
        if mode == "full":
            return self.forward(batch).score
        branch = mode.split("_")[0]
        if len(self.branches) == 1:
            if branch != self.branches[0]:
                raise ConfigError(f"单分支模型 {self.cfg.topology} 无法做 {mode} 推理")
            return self.forward(batch).score
        feature = self.backbone.forward(batch[branch], self.store, branch)
        return branch_only_score(feature, branch, self.params, mode=self.cfg.fusion)
