"""
双分支特征融合与质量回归

- cross_attention: 技术 query 对美学 key/value, 美学 query 对技术 key/value, 各用本分支的投影
- self_attention: 两组 token 的并集上做一次联合注意力, 一组投影
- concat: 通道拼接后直接回归
- score: 两个独立回归头分别打分后取平均

回归头 R 逐 token 作用 (in -> in/2 -> 1, GELU), 得到质量图; 分数为质量图的全局平均.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from calculation.autodiff import Tensor, ops
from utils.exceptions import ConfigError, DimensionError

from .backbone import FeatureMap
from .param_store import BRANCHES, GROUP_FUSION, GROUP_HEAD, ParamStore

FUSION_MODES = ("score", "concat", "self_attention", "cross_attention")
PROJECTIONS = ("attn.query", "attn.key", "attn.value")


@dataclass
class QualityMap:
    """逐 token 质量图: values[B, T', H', W']"""
    values: Tensor
    branch: str

    def numpy(self) -> np.ndarray:
        return self.values.data


@dataclass
class FusionOutput:
    score: Tensor                                  # [B]
    maps: Dict[str, QualityMap] = field(default_factory=dict)


# ---------------------------------------------------------------- 参数

def head_shapes(in_dim: int) -> Dict[str, Tuple[int, ...]]:
    hidden = max(in_dim // 2, 1)
    return {
        "regressor.fc1.weight": (in_dim, hidden),
        "regressor.fc1.bias": (hidden,),
        "regressor.fc2.weight": (hidden, 1),
        "regressor.fc2.bias": (1,),
    }


def register_head(store: ParamStore, in_dim: int, branches: Tuple[str, ...], share: bool) -> None:
    for logical, shape in head_shapes(in_dim).items():
        init = "zeros" if logical.endswith(".bias") else "trunc_normal"
        store.create_bound(logical, shape, GROUP_HEAD, init=init, branches=branches, share=share)


def register_fusion(store: ParamStore, mode: str, channels: int, branches: Tuple[str, ...] = BRANCHES) -> None:
    """
    注册融合投影与回归头

    :param store: 参数存储
    :param mode: 融合方式; 单分支时只注册一个回归头
    :param channels: 骨干输出通道数
    :param branches: 参与融合的分支
    """
    if mode not in FUSION_MODES:
        raise ConfigError(f"未知的融合方式: {mode}, 必须是{list(FUSION_MODES)}之一")
    if len(branches) == 1:
        register_head(store, channels, branches, share=True)
        return
    if mode == "cross_attention":
        for logical in PROJECTIONS:
            store.create_bound(logical, (channels, channels), GROUP_FUSION, branches=branches, share=False)
        register_head(store, channels, branches, share=True)
    elif mode == "self_attention":
        for logical in PROJECTIONS:
            store.create_bound(logical, (channels, channels), GROUP_FUSION, branches=branches, share=True)
        register_head(store, channels, branches, share=True)
    elif mode == "concat":
        register_head(store, 2 * channels, branches, share=True)
    else:
        register_head(store, channels, branches, share=False)


@dataclass
class FusionParams:
    """从 ParamStore 按分支取融合投影与回归头"""
    store: ParamStore
    heads: int

    def projections(self, branch: str) -> Tuple[Tensor, Tensor, Tensor]:
        return tuple(self.store.get(branch, logical) for logical in PROJECTIONS)

    def head(self, branch: str) -> Tuple[Tensor, ...]:
        return tuple(self.store.get(branch, f"regressor.{name}")
                     for name in ("fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"))


# ---------------------------------------------------------------- 计算

def regress(x: Tensor, head: Tuple[Tensor, ...]) -> Tensor:
    """逐 token 回归: x[..., D] -> [...]"""
    w1, b1, w2, b2 = head
    out = ops.linear(ops.gelu(ops.linear(x, w1, b1)), w2, b2)
    return ops.reshape(out, out.shape[:-1])


def multi_head_attention(queries: Tensor, context: Tensor, wq: Tensor, wk: Tensor, wv: Tensor,
                         heads: int) -> Tensor:
    """
    多头注意力, 无输出投影, 无残差

    :param queries: [B, N, C]
    :param context: [B, M, C], 提供 key 与 value
    :return: [B, N, C]
    """
    batch, n, channels = queries.shape
    m = context.shape[1]
    if channels % heads:
        raise DimensionError(f"通道数不能被头数 {heads} 整除", queries.shape)
    d = channels // heads

    def split(x: Tensor, weight: Tensor, length: int) -> Tensor:
        projected = ops.linear(x, weight)
        return ops.transpose(ops.reshape(projected, (batch, length, heads, d)), (0, 2, 1, 3))

    q, k, v = split(queries, wq, n), split(context, wk, m), split(context, wv, m)
    logits = ops.scale(ops.bmm(q, ops.transpose(k, (0, 1, 3, 2))), d ** -0.5)
    out = ops.bmm(ops.softmax(logits, axis=-1), v)
    return ops.reshape(ops.transpose(out, (0, 2, 1, 3)), (batch, n, channels))


def _flatten(f: FeatureMap) -> Tensor:
    batch, frames, height, width, channels = f.tokens.shape
    return ops.reshape(f.tokens, (batch, frames * height * width, channels))


def _to_map(values: Tensor, like: FeatureMap, branch: str) -> QualityMap:
    return QualityMap(values=ops.reshape(values, like.tokens.shape[:-1]), branch=branch)


def _check_pair(f_t: FeatureMap, f_a: FeatureMap) -> None:
    if f_t.tokens.shape != f_a.tokens.shape:
        raise DimensionError("两个分支的特征形状不一致", f_t.tokens.shape, f_a.tokens.shape)


def dual_cross_attention(f_t: FeatureMap, f_a: FeatureMap, params: FusionParams) -> Tuple[QualityMap, QualityMap]:
    """
    Q_t = R(Attn(F_t W_t^Q, F_a W_t^K, F_a W_t^V)), Q_a = R(Attn(F_a W_a^Q, F_t W_a^K, F_t W_a^V))

    :raises DimensionError: 两分支特征形状不一致
    """
    _check_pair(f_t, f_a)
    x_t, x_a = _flatten(f_t), _flatten(f_a)
    y_t = multi_head_attention(x_t, x_a, *params.projections("technical"), heads=params.heads)
    y_a = multi_head_attention(x_a, x_t, *params.projections("aesthetic"), heads=params.heads)
    q_t = regress(y_t, params.head("technical"))
    q_a = regress(y_a, params.head("aesthetic"))
    return _to_map(q_t, f_t, "technical"), _to_map(q_a, f_a, "aesthetic")


def pool(q: QualityMap) -> Tensor:
    """全局平均: [B, ...] -> [B]"""
    batch = q.values.shape[0]
    return ops.mean(ops.reshape(q.values, (batch, -1)), axis=1)


def predict_score(q_t: QualityMap, q_a: QualityMap) -> Tensor:
    """两张质量图拼接后的全局平均"""
    batch = q_t.values.shape[0]
    joint = ops.concat([ops.reshape(q_t.values, (batch, -1)), ops.reshape(q_a.values, (batch, -1))], axis=1)
    return ops.mean(joint, axis=1)


def merged_map(q_t: QualityMap, q_a: QualityMap) -> QualityMap:
    """逐 token 平均的合并质量图"""
    return QualityMap(values=ops.scale(ops.add(q_t.values, q_a.values), 0.5), branch="merged")


def fuse_maps(f_t: FeatureMap, f_a: FeatureMap, mode: str, params: FusionParams) -> FusionOutput:
    """按融合方式计算分数与质量图"""
    _check_pair(f_t, f_a)
    if mode == "cross_attention":
        q_t, q_a = dual_cross_attention(f_t, f_a, params)
        return FusionOutput(score=predict_score(q_t, q_a),
                            maps={"technical": q_t, "aesthetic": q_a, "merged": merged_map(q_t, q_a)})
    if mode == "self_attention":
        x_t, x_a = _flatten(f_t), _flatten(f_a)
        union = ops.concat([x_t, x_a], axis=1)
        y = multi_head_attention(union, union, *params.projections("technical"), heads=params.heads)
        q = regress(y, params.head("technical"))                     # [B, 2N]
        halves = ops.transpose(ops.reshape(q, (q.shape[0], 2, x_t.shape[1])), (1, 0, 2))
        q_t = _to_map(ops.gather_rows(halves, np.array([0])), f_t, "technical")
        q_a = _to_map(ops.gather_rows(halves, np.array([1])), f_a, "aesthetic")
        return FusionOutput(score=predict_score(q_t, q_a), maps={"technical": q_t, "aesthetic": q_a})
    if mode == "concat":
        q = regress(ops.concat([f_t.tokens, f_a.tokens], axis=-1), params.head("technical"))
        joint = QualityMap(values=q, branch="joint")
        return FusionOutput(score=pool(joint), maps={"joint": joint})
    if mode == "score":
        q_t = QualityMap(values=regress(f_t.tokens, params.head("technical")), branch="technical")
        q_a = QualityMap(values=regress(f_a.tokens, params.head("aesthetic")), branch="aesthetic")
        score = ops.scale(ops.add(pool(q_t), pool(q_a)), 0.5)
        return FusionOutput(score=score, maps={"technical": q_t, "aesthetic": q_a})
    raise ConfigError(f"未知的融合方式: {mode}")


def fuse(f_t: FeatureMap, f_a: FeatureMap, mode: str, params: FusionParams) -> Tensor:
    return fuse_maps(f_t, f_a, mode, params).score


def branch_only_score(f: FeatureMap, branch: str, params: FusionParams, mode: str = "cross_attention") -> Tensor:
    """
    单分支推理: 另一分支的特征用本分支特征代替, 只对本分支的质量图做池化

    :param f: 本分支特征
    :param branch: technical / aesthetic
    :param params: 双分支模型的融合参数
    :param mode: 模型的融合方式
    """
    if branch not in BRANCHES:
        raise ConfigError(f"未知分支: {branch}")
    out = fuse_maps(f, f, mode, params)
    if mode == "concat":
        return out.score
    return pool(out.maps[branch])


def single_branch_output(f: FeatureMap, params: FusionParams) -> FusionOutput:
    """单分支拓扑: 回归头直接作用于本分支特征"""
    q = QualityMap(values=regress(f.tokens, params.head(f.branch)), branch=f.branch)
    return FusionOutput(score=pool(q), maps={f.branch: q})


def extra_parameter_count(store: ParamStore) -> int:
    """融合与回归头的参数量"""
    return store.count(GROUP_FUSION) + store.count(GROUP_HEAD)
