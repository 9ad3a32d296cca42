"""
层级式窗口注意力骨干网络 (缩小版)

结构: 3D 分块嵌入 -> [窗口注意力块 x blocks] -> 2x2 合并 -> ... -> 末层归一化.
窗口在每个时间切片内做 2D 划分, 不做窗口平移.
技术分支使用门控相对位置偏置, 美学分支使用普通相对位置偏置,
其余权重经 ParamStore 绑定表解析 (共享或独立).
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from calculation.autodiff import Tensor, ops
from calculation.autodiff.ops import WindowSize, window_merge, window_partition, window_shape
from config import get_settings
from data.sampler.fragment_sampler import (AestheticClip, FragmentClip, SamplerConfig, fragment_geometry,
                                           normalize_clip)
from utils.custom_logger import CustomLogger
from utils.exceptions import CheckpointError, ConfigError, DimensionError

from .param_store import BRANCHES, GROUP_BACKBONE, GROUP_BIAS, ParamStore
from .position_bias import (GateCache, GatedRelativeBias, RelativeBias, table_size, token_patch_ids,
                            window_gate)

logger = CustomLogger(name="backbone", log_level=logging.WARNING)


class StageConfig(BaseModel):
    blocks: int = Field(2, ge=1)
    channels: int = Field(32, ge=1)
    heads: int = Field(2, ge=1)


class PatchEmbedConfig(BaseModel):
    spatial: int = Field(4, ge=1, description="空间分块边长")
    temporal: int = Field(2, ge=1, description="时间分块长度")


class BackboneConfig(BaseModel):
    """骨干网络结构参数"""
    stages: List[StageConfig]
    window: int = Field(4, ge=1)
    patch_embed: PatchEmbedConfig = Field(default_factory=PatchEmbedConfig)
    input_side: int = Field(64, ge=1)
    clip_len: int = Field(4, ge=1)
    mlp_ratio: int = Field(4, ge=1)

    @model_validator(mode="after")
    def validate_params(self) -> "BackboneConfig":
        if not self.stages:
            raise ValueError("至少需要一个 stage")
        if self.input_side % self.patch_embed.spatial:
            raise ValueError(f"输入边长 {self.input_side} 不能被空间分块 {self.patch_embed.spatial} 整除")
        if self.clip_len % self.patch_embed.temporal:
            raise ValueError(f"clip 长度 {self.clip_len} 不能被时间分块 {self.patch_embed.temporal} 整除")
        side = self.input_side // self.patch_embed.spatial
        for index, stage in enumerate(self.stages):
            if stage.channels % stage.heads:
                raise ValueError(f"stage {index} 通道数 {stage.channels} 不能被头数 {stage.heads} 整除")
            if index > 0:
                if side % 2:
                    raise ValueError(f"stage {index} 前的 token 网格 {side} 无法做 2x2 合并")
                side //= 2
            window = min(self.window, side)
            if side % window:
                raise ValueError(f"stage {index} 的 token 网格 {side} 不能被窗口 {window} 整除")
        return self

    @classmethod
    def toy(cls, **overrides) -> "BackboneConfig":
        return cls(**{**get_settings().TOY_BACKBONE, **overrides})

    def stage_grid(self, stage: int) -> Tuple[int, int, int]:
        """stage 的 token 网格 (T', H', W')"""
        side = self.input_side // self.patch_embed.spatial // (2 ** stage)
        return self.clip_len // self.patch_embed.temporal, side, side

    def stage_window(self, stage: int) -> int:
        return min(self.window, self.stage_grid(stage)[1])

    def spatial_stride(self, stage: int) -> int:
        return self.patch_embed.spatial * (2 ** stage)

    @property
    def out_channels(self) -> int:
        return self.stages[-1].channels

    @property
    def final_heads(self) -> int:
        return self.stages[-1].heads

    @property
    def output_grid(self) -> Tuple[int, int, int]:
        return self.stage_grid(len(self.stages) - 1)


@dataclass
class FeatureMap:
    """骨干输出: tokens[B, T', H', W', C] 及来源分支"""
    tokens: Tensor
    branch: str

    @property
    def grid(self) -> Tuple[int, int, int]:
        return tuple(self.tokens.shape[1:4])

    @property
    def channels(self) -> int:
        return self.tokens.shape[-1]


# ---------------------------------------------------------------- 参数命名

def block_prefix(stage: int, block: int) -> str:
    return f"stage{stage}.block{block}"


def backbone_shapes(cfg: BackboneConfig) -> Dict[str, Tuple[int, ...]]:
    """骨干所有可共享参数的逻辑名与形状 (不含位置偏置表)"""
    pe = cfg.patch_embed
    c0 = cfg.stages[0].channels
    shapes: Dict[str, Tuple[int, ...]] = {
        "patch_embed.weight": (pe.temporal * pe.spatial * pe.spatial * 3, c0),
        "patch_embed.bias": (c0,),
        "patch_embed.norm.gain": (c0,),
        "patch_embed.norm.bias": (c0,),
    }
    for s, stage in enumerate(cfg.stages):
        c = stage.channels
        if s > 0:
            prev = cfg.stages[s - 1].channels
            shapes[f"merge{s}.norm.gain"] = (4 * prev,)
            shapes[f"merge{s}.norm.bias"] = (4 * prev,)
            shapes[f"merge{s}.reduction.weight"] = (4 * prev, c)
        hidden = c * cfg.mlp_ratio
        for b in range(stage.blocks):
            p = block_prefix(s, b)
            shapes.update({
                f"{p}.norm1.gain": (c,),
                f"{p}.norm1.bias": (c,),
                f"{p}.qkv.weight": (c, 3 * c),
                f"{p}.qkv.bias": (3 * c,),
                f"{p}.proj.weight": (c, c),
                f"{p}.proj.bias": (c,),
                f"{p}.norm2.gain": (c,),
                f"{p}.norm2.bias": (c,),
                f"{p}.mlp.fc1.weight": (c, hidden),
                f"{p}.mlp.fc1.bias": (hidden,),
                f"{p}.mlp.fc2.weight": (hidden, c),
                f"{p}.mlp.fc2.bias": (c,),
            })
    last = cfg.out_channels
    shapes["norm.gain"] = (last,)
    shapes["norm.bias"] = (last,)
    return shapes


def bias_table_names(cfg: BackboneConfig, branch: str) -> List[str]:
    """分支的位置偏置表逻辑名: 技术分支 grpb_intra/grpb_cross, 美学分支 rpb"""
    suffixes = ("grpb_intra", "grpb_cross") if branch == "technical" else ("rpb",)
    return [f"{block_prefix(s, b)}.{suffix}"
            for s, stage in enumerate(cfg.stages) for b in range(stage.blocks) for suffix in suffixes]


def _init_kind(logical: str) -> str:
    if logical.endswith(".gain"):
        return "ones"
    if logical.endswith(".bias"):
        return "zeros"
    return "trunc_normal"


def register_backbone(store: ParamStore, cfg: BackboneConfig, branches: Tuple[str, ...],
                      share: Optional[bool] = None) -> None:
    for logical, shape in backbone_shapes(cfg).items():
        store.create_bound(logical, shape, GROUP_BACKBONE, init=_init_kind(logical), branches=branches, share=share)


def register_position_bias(store: ParamStore, cfg: BackboneConfig, branch: str) -> None:
    """位置偏置表总是按分支独立, 初始为零"""
    for logical in bias_table_names(cfg, branch):
        stage = int(logical.split(".")[0][len("stage"):])
        shape = (table_size(cfg.stage_window(stage)), cfg.stages[stage].heads)
        store.create_bound(logical, shape, GROUP_BIAS, init="zeros", branches=(branch,), share=False)


def build_siamese(cfg: BackboneConfig, mode: str = "shared", seed: int = 0, dtype=np.float32) -> ParamStore:
    """
    构建双分支参数存储

    :param cfg: 骨干结构
    :param mode: shared 两分支绑定同一组骨干张量; unshared 每分支一份相同初始化的副本
    :param seed: 初始化种子
    :param dtype: 参数精度
    """
    if mode not in ("shared", "unshared"):
        raise ConfigError(f"双分支模式必须是 shared 或 unshared, 当前值: {mode}")
    store = ParamStore(mode=mode, seed=seed, dtype=dtype)
    register_backbone(store, cfg, BRANCHES)
    for branch in BRANCHES:
        register_position_bias(store, cfg, branch)
    logger.debug(f"构建双分支参数: {store}")
    return store


def build_single(cfg: BackboneConfig, branch: str, seed: int = 0, dtype=np.float32) -> ParamStore:
    """单分支参数存储"""
    if branch not in BRANCHES:
        raise ConfigError(f"未知分支: {branch}")
    store = ParamStore(mode="single", seed=seed, dtype=dtype)
    register_backbone(store, cfg, (branch,), share=True)
    register_position_bias(store, cfg, branch)
    return store


def load_pretrained_backbone(store: ParamStore, cfg: BackboneConfig, weights: Dict[str, np.ndarray]) -> int:
    """
    把预训练的单分支骨干复制到所有分支绑定

    :param weights: 逻辑名 -> 数组, 包含骨干参数与每个块的 rpb 表
    :return: 写入的张量个数
    :raises CheckpointError: 缺少参数或形状不一致
    """
    written = 0
    for branch in store.branches():
        if not store.has(branch, "patch_embed.weight"):
            continue
        for logical in backbone_shapes(cfg):
            written += _assign(store.get(branch, logical), weights, logical)
        for logical in bias_table_names(cfg, branch):
            source = logical.rsplit(".", 1)[0] + ".rpb"
            written += _assign(store.get(branch, logical), weights, source)
    logger.info(f"载入预训练骨干: {written} 个张量")
    return written


def _assign(target: Tensor, weights: Dict[str, np.ndarray], key: str) -> int:
    if key not in weights:
        raise CheckpointError(f"预训练权重缺少 {key}")
    value = np.asarray(weights[key])
    if value.shape != target.shape:
        raise CheckpointError(f"预训练权重 {key} 形状不一致: {value.shape} vs {target.shape}")
    target.data = value.astype(target.dtype).copy()
    return 1


def export_backbone_weights(store: ParamStore, cfg: BackboneConfig, branch: str = "aesthetic") -> Dict[str, np.ndarray]:
    """导出 branch 分支的骨干与 rpb 表, 供 load_pretrained_backbone 使用"""
    weights = {logical: store.get(branch, logical).data.copy() for logical in backbone_shapes(cfg)}
    for logical in bias_table_names(cfg, branch):
        weights[logical] = store.get(branch, logical).data.copy()
    return weights


# ---------------------------------------------------------------- 前向

def window_attention(tokens: Tensor,
                     qkv_weight: Tensor,
                     qkv_bias: Tensor,
                     proj_weight: Tensor,
                     proj_bias: Tensor,
                     heads: int,
                     window: WindowSize,
                     bias: Optional[Tensor] = None) -> Tensor:
    """
    非重叠窗口多头自注意力

    logits = Q K^T / sqrt(d) + bias, 在窗口内做 softmax.

    :param tokens: [L, H, W, C]
    :param bias: [num_windows, heads, n, n] 或 None
    :return: [L, H, W, C]
    """
    leading, height, width, channels = tokens.shape
    if channels % heads:
        raise DimensionError(f"通道数不能被头数 {heads} 整除", tokens.shape)
    wh, ww = window_shape(window)
    n = wh * ww
    head_dim = channels // heads

    windows = window_partition(tokens, (wh, ww))                     # [nW, n, C]
    num_windows = windows.shape[0]
    qkv = ops.linear(windows, qkv_weight, qkv_bias)                  # [nW, n, 3C]
    qkv = ops.transpose(ops.reshape(qkv, (num_windows, n, 3, heads, head_dim)), (2, 0, 3, 1, 4))
    q, k, v = (ops.reshape(ops.gather_rows(qkv, np.array([i])), (num_windows, heads, n, head_dim))
               for i in range(3))

    logits = ops.scale(ops.bmm(q, ops.transpose(k, (0, 1, 3, 2))), head_dim ** -0.5)
    if bias is not None:
        if bias.shape != logits.shape:
            raise DimensionError("注意力偏置形状不一致", bias.shape, logits.shape)
        logits = ops.add(logits, bias)
    attn = ops.softmax(logits, axis=-1)
    out = ops.bmm(attn, v)                                           # [nW, heads, n, d]
    out = ops.reshape(ops.transpose(out, (0, 2, 1, 3)), (num_windows, n, channels))
    out = ops.linear(out, proj_weight, proj_bias)
    return window_merge(out, leading, height, width, (wh, ww))


ClipInput = Union[Tensor, np.ndarray, FragmentClip, AestheticClip]


class Backbone:
    """骨干前向; 参数全部来自 ParamStore, 本类只持有结构与门控缓存"""

    def __init__(self, cfg: BackboneConfig, sampler: Optional[SamplerConfig] = None):
        """
        :param cfg: 骨干结构
        :param sampler: 片段采样参数, 技术分支的门控偏置需要它给出的小块布局
        """
        self.cfg = cfg
        self.sampler = sampler
        self._gates = GateCache()
        if sampler is not None:
            if sampler.side != cfg.input_side or sampler.clip_len != cfg.clip_len:
                raise ConfigError(
                    f"采样输出 {sampler.clip_len}x{sampler.side} 与骨干输入 {cfg.clip_len}x{cfg.input_side} 不一致")
            self.geometry = fragment_geometry(sampler)
        else:
            self.geometry = None

    def _as_batch(self, clip: ClipInput) -> Tensor:
        if isinstance(clip, (FragmentClip, AestheticClip)):
            clip = normalize_clip(clip.tensor)[None]
        if isinstance(clip, np.ndarray):
            clip = Tensor(clip)
        expected = (self.cfg.clip_len, self.cfg.input_side, self.cfg.input_side, 3)
        if clip.data.ndim != 5 or clip.shape[1:] != expected:
            raise DimensionError("骨干输入形状不一致", clip.shape, ("B",) + expected)
        return clip

    def _position_bias(self, store: ParamStore, branch: str, stage: int, block: int, batch: int,
                       num_windows: int) -> Tensor:
        window = (self.cfg.stage_window(stage),) * 2
        prefix = block_prefix(stage, block)
        if branch == "technical":
            if self.geometry is None:
                raise ConfigError("技术分支需要片段采样参数以计算门控偏置")

            def factory():
                ids = token_patch_ids(self.geometry, self.cfg.stage_grid(stage),
                                      self.cfg.spatial_stride(stage), self.cfg.patch_embed.temporal)
                return window_gate(ids, window, batch=batch)

            gate = self._gates.get((stage, batch), factory)
            bias = GatedRelativeBias(intra=store.get(branch, f"{prefix}.grpb_intra"),
                                     cross=store.get(branch, f"{prefix}.grpb_cross"),
                                     window=window, gate=gate)
        else:
            bias = RelativeBias(table=store.get(branch, f"{prefix}.rpb"), window=window)
        return bias.materialize(num_windows)

    def _patch_embed(self, x: Tensor, store: ParamStore, branch: str) -> Tensor:
        batch = x.shape[0]
        pt, ps = self.cfg.patch_embed.temporal, self.cfg.patch_embed.spatial
        frames, side, _ = self.cfg.stage_grid(0)
        x = ops.reshape(x, (batch, frames, pt, side, ps, side, ps, 3))
        x = ops.transpose(x, (0, 1, 3, 5, 2, 4, 6, 7))
        x = ops.reshape(x, (batch, frames, side, side, pt * ps * ps * 3))
        x = ops.linear(x, store.get(branch, "patch_embed.weight"), store.get(branch, "patch_embed.bias"))
        return ops.layer_norm(x, store.get(branch, "patch_embed.norm.gain"), store.get(branch, "patch_embed.norm.bias"))

    def _merge(self, x: Tensor, store: ParamStore, branch: str, stage: int) -> Tensor:
        """2x2 邻域拼接后归一化并线性降维"""
        batch, frames, height, width, channels = x.shape
        x = ops.reshape(x, (batch, frames, height // 2, 2, width // 2, 2, channels))
        x = ops.transpose(x, (0, 1, 2, 4, 3, 5, 6))
        x = ops.reshape(x, (batch, frames, height // 2, width // 2, 4 * channels))
        x = ops.layer_norm(x, store.get(branch, f"merge{stage}.norm.gain"), store.get(branch, f"merge{stage}.norm.bias"))
        return ops.linear(x, store.get(branch, f"merge{stage}.reduction.weight"))

    def _block(self, x: Tensor, store: ParamStore, branch: str, stage: int, block: int) -> Tensor:
        batch, frames, height, width, channels = x.shape
        p = block_prefix(stage, block)
        get = lambda name: store.get(branch, f"{p}.{name}")  # noqa: E731
        window = self.cfg.stage_window(stage)
        num_windows = batch * frames * (height // window) * (width // window)

        h = ops.layer_norm(x, get("norm1.gain"), get("norm1.bias"))
        h = ops.reshape(h, (batch * frames, height, width, channels))
        bias = self._position_bias(store, branch, stage, block, batch, num_windows)
        h = window_attention(h, get("qkv.weight"), get("qkv.bias"), get("proj.weight"), get("proj.bias"),
                             heads=self.cfg.stages[stage].heads, window=window, bias=bias)
        x = ops.add(x, ops.reshape(h, x.shape))

        h = ops.layer_norm(x, get("norm2.gain"), get("norm2.bias"))
        h = ops.linear(ops.gelu(ops.linear(h, get("mlp.fc1.weight"), get("mlp.fc1.bias"))),
                       get("mlp.fc2.weight"), get("mlp.fc2.bias"))
        return ops.add(x, h)

    def forward(self, clip: ClipInput, store: ParamStore, branch: str) -> FeatureMap:
        """
        :param clip: [B, Tc, S, S, 3] 归一化输入, 或单个 FragmentClip / AestheticClip
        :param store: 参数存储
        :param branch: technical / aesthetic
        :return: FeatureMap, tokens [B, T', H', W', C]
        :raises DimensionError: 输入形状与结构不符
        """
        x = self._as_batch(clip)
        x = self._patch_embed(x, store, branch)
        for s, stage in enumerate(self.cfg.stages):
            if s > 0:
                x = self._merge(x, store, branch, s)
            for b in range(stage.blocks):
                x = self._block(x, store, branch, s, b)
        x = ops.layer_norm(x, store.get(branch, "norm.gain"), store.get(branch, "norm.bias"))
        return FeatureMap(tokens=x, branch=branch)

    __call__ = forward
