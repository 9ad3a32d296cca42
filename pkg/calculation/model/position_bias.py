"""
窗口注意力的相对位置偏置

- RelativeBias: 每个注意力头一张 (2wh-1)(2ww-1) 的偏置表, 按相对位移查表
- GatedRelativeBias: 片段输入专用, 两张表 (同一小块内 / 跨小块),
  由 query 与 key 是否来自同一个采样小块的门控在两者之间选择
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from calculation.autodiff import Tensor, ops
from calculation.autodiff.ops import WindowSize, window_permutation, window_shape
from data.sampler.fragment_sampler import FragmentGeometry
from utils.exceptions import DimensionError


def table_size(window: WindowSize) -> int:
    wh, ww = window_shape(window)
    return (2 * wh - 1) * (2 * ww - 1)


def relative_position_index(window: WindowSize) -> np.ndarray:
    """
    窗口内两两 token 的相对位移下标

    :return: [n, n] int64, 相同位移的 (i, j) 对得到相同下标
    """
    wh, ww = window_shape(window)
    rows, cols = np.meshgrid(np.arange(wh), np.arange(ww), indexing="ij")
    rows, cols = rows.reshape(-1), cols.reshape(-1)
    d_row = rows[:, None] - rows[None, :] + (wh - 1)
    d_col = cols[:, None] - cols[None, :] + (ww - 1)
    return (d_row * (2 * ww - 1) + d_col).astype(np.int64)


def _lookup(table: Tensor, index: np.ndarray, num_windows: int) -> Tensor:
    """table[V, heads] -> [num_windows, heads, n, n]"""
    per_pair = ops.embedding(table, index)             # [n, n, heads]
    per_head = ops.transpose(per_pair, (2, 0, 1))      # [heads, n, n]
    return ops.expand(per_head, (num_windows,))


@dataclass
class RelativeBias:
    """普通相对位置偏置"""
    table: Tensor
    window: Tuple[int, int]
    index: np.ndarray = field(init=False)

    def __post_init__(self):
        self.index = relative_position_index(self.window)

    def materialize(self, num_windows: int) -> Tensor:
        return _lookup(self.table, self.index, num_windows)


@dataclass
class GatedRelativeBias:
    """
    门控相对位置偏置: bias = gate * T_intra[Δ] + (1 - gate) * T_cross[Δ]

    gate[w, i, j] = 1 当窗口 w 中第 i, j 个 token 来自同一个采样小块, 否则为 0.
    """
    intra: Tensor
    cross: Tensor
    window: Tuple[int, int]
    gate: np.ndarray  # [num_windows, n, n]
    index: np.ndarray = field(init=False)

    def __post_init__(self):
        self.index = relative_position_index(self.window)

    def materialize(self, num_windows: int) -> Tensor:
        if self.gate.shape[0] != num_windows:
            raise DimensionError("门控窗口数与注意力窗口数不一致", self.gate.shape, (num_windows,))
        heads = self.intra.shape[1]
        gate = np.broadcast_to(self.gate[:, None, :, :], (num_windows, heads) + self.gate.shape[1:])
        gate_t = Tensor(gate.astype(self.intra.dtype))
        inverse_t = Tensor((1.0 - gate).astype(self.intra.dtype))
        intra = _lookup(self.intra, self.index, num_windows)
        cross = _lookup(self.cross, self.index, num_windows)
        return ops.add(ops.mul(intra, gate_t), ops.mul(cross, inverse_t))


def token_patch_ids(geometry: FragmentGeometry,
                    grid: Tuple[int, int, int],
                    spatial_stride: int,
                    temporal_stride: int) -> np.ndarray:
    """
    每个 token 所属的采样小块编号 (按 token 覆盖区域左上角像素判断)

    :param geometry: 片段布局
    :param grid: token 网格 (T', H', W')
    :param spatial_stride: 一个 token 覆盖的像素边长
    :param temporal_stride: 一个 token 覆盖的帧数
    :return: [T', H', W'] int64
    """
    frames, height, width = grid
    cells = geometry.cell_id[::spatial_stride, ::spatial_stride][:height, :width]
    cubes = geometry.cube_id[::temporal_stride][:frames]
    num_cells = int(geometry.cell_id.max()) + 1
    return (cubes[:, None, None] * num_cells + cells[None, :, :]).astype(np.int64)


def window_gate(patch_ids: np.ndarray, window: WindowSize, batch: int = 1) -> np.ndarray:
    """
    同一小块门控

    :param patch_ids: [T', H', W'] token 小块编号
    :param window: 窗口尺寸
    :param batch: 批大小, 门控按窗口顺序重复
    :return: [batch * num_windows, n, n] 0/1
    """
    wh, ww = window_shape(window)
    frames, height, width = patch_ids.shape
    perm = window_permutation(frames, height, width, (wh, ww))
    per_window = patch_ids.reshape(-1)[perm].reshape(-1, wh * ww)
    gate = (per_window[:, :, None] == per_window[:, None, :]).astype(np.float64)
    return np.tile(gate, (batch, 1, 1))


class GateCache:
    """按 (stage, batch) 缓存门控数组"""

    def __init__(self):
        self._cache: Dict[Tuple[int, int], np.ndarray] = {}

    def get(self, key: Tuple[int, int], factory) -> np.ndarray:
        if key not in self._cache:
            self._cache[key] = factory()
        return self._cache[key]
