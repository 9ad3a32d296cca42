"""
网络输入采样

- 技术分支: 时空网格小立方体采样, 拼接原分辨率小块得到片段 (fragment)
- 美学分支: 对同一组帧做双线性下采样

两个分支使用完全相同的帧下标.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import cv2
import numpy as np
from pydantic import BaseModel, Field

from config import get_settings
from data.video import RawVideo
from utils.custom_logger import CustomLogger
from utils.exceptions import ContractError, InputTooSmallError
from utils.rng import SplittableRNG

logger = CustomLogger(name="fragment_sampler", log_level=logging.WARNING)


class SamplerConfig(BaseModel):
    """片段采样参数"""
    grid_s: int = Field(7, description="每边网格数", ge=1)
    patch: int = Field(32, description="小块边长 (像素)", ge=1)
    cubes_t: int = Field(4, description="时间方向立方体数", ge=1)
    frames_per_cube: int = Field(4, description="每个立方体的连续帧数", ge=1)
    seed: int = Field(0, description="64 位采样种子", ge=0, lt=2 ** 64)

    @property
    def side(self) -> int:
        """网络输入边长"""
        return self.grid_s * self.patch

    @property
    def clip_len(self) -> int:
        return self.cubes_t * self.frames_per_cube

    @classmethod
    def full(cls, **overrides) -> "SamplerConfig":
        return cls(**{**get_settings().SAMPLER, **overrides})

    @classmethod
    def toy(cls, **overrides) -> "SamplerConfig":
        return cls(**{**get_settings().TOY_SAMPLER, **overrides})

    def with_seed(self, seed: int) -> "SamplerConfig":
        return self.model_copy(update={"seed": int(seed)})


@dataclass
class FragmentClip:
    """技术分支输入"""
    tensor: np.ndarray        # [Tc, S, S, 3] uint8
    sample_map: np.ndarray    # [Tc, S, S, 3] int32: (帧, 行, 列)
    frame_indices: List[int]
    cell_origins: np.ndarray  # [cubes_t, grid_s, grid_s, 2] 每个立方体/网格的源左上角


@dataclass
class AestheticClip:
    """美学分支输入"""
    tensor: np.ndarray        # [Tc, S, S, 3] float32, 取值 [0, 255]
    frame_indices: List[int]


@dataclass
class FragmentGeometry:
    """片段布局: 每个输出像素所属的小块, 每个输出帧所属的立方体"""
    cell_id: np.ndarray  # [S, S]
    cube_id: np.ndarray  # [Tc]


def _span_bounds(length: int, parts: int) -> np.ndarray:
    return (np.arange(parts + 1) * length) // parts


def select_frames(video: RawVideo,
                  cubes_t: int,
                  frames_per_cube: int,
                  seed: int,
                  force_zero_offsets: bool = False) -> List[int]:
    """
    选取时间方向的帧下标

    [0, T) 等分为 cubes_t 段, 每段在随机偏移处取 frames_per_cube 个连续帧.

    :param video: 原始视频
    :param cubes_t: 段数
    :param frames_per_cube: 每段帧数
    :param seed: 采样种子
    :param force_zero_offsets: 所有段偏移取 0 (测试用)
    :return: 升序帧下标列表
    :raises InputTooSmallError: 帧数不足
    """
    needed = cubes_t * frames_per_cube
    if video.num_frames < needed:
        raise InputTooSmallError(f"视频 {video.id} 只有 {video.num_frames} 帧, 至少需要 {needed} 帧")

    bounds = _span_bounds(video.num_frames, cubes_t)
    rng = SplittableRNG(seed, name="frames")
    indices: List[int] = []
    for cube in range(cubes_t):
        start, end = int(bounds[cube]), int(bounds[cube + 1])
        slack = end - start - frames_per_cube
        offset = 0 if force_zero_offsets or slack == 0 else int(rng.split(cube).integers(0, slack + 1))
        indices.extend(range(start + offset, start + offset + frames_per_cube))
    return indices


def _cell_offsets(cfg: SamplerConfig, height: int, width: int, force_zero_offsets: bool) -> np.ndarray:
    """每个 (立方体, 网格行, 网格列) 的源左上角坐标"""
    row_bounds = _span_bounds(height, cfg.grid_s)
    col_bounds = _span_bounds(width, cfg.grid_s)
    origins = np.zeros((cfg.cubes_t, cfg.grid_s, cfg.grid_s, 2), dtype=np.int64)
    rng = SplittableRNG(cfg.seed, name="cells")
    for cube in range(cfg.cubes_t):
        for i in range(cfg.grid_s):
            for j in range(cfg.grid_s):
                slack_y = int(row_bounds[i + 1] - row_bounds[i]) - cfg.patch
                slack_x = int(col_bounds[j + 1] - col_bounds[j]) - cfg.patch
                if force_zero_offsets:
                    dy = dx = 0
                else:
                    dy, dx = rng.split(cube, i, j).integers(0, [slack_y + 1, slack_x + 1])
                origins[cube, i, j] = (row_bounds[i] + dy, col_bounds[j] + dx)
    return origins


def sample_fragment(video: RawVideo, cfg: SamplerConfig, force_zero_offsets: bool = False) -> FragmentClip:
    """
    时空网格小立方体采样

    :param video: 原始视频
    :param cfg: 采样参数
    :param force_zero_offsets: 帧和网格内偏移全部取 0 (测试用)
    :return: FragmentClip, 每个像素都是原视频像素的直接拷贝
    :raises InputTooSmallError: 视频空间尺寸或帧数不足
    """
    side = cfg.side
    if video.height < side or video.width < side:
        raise InputTooSmallError(
            f"视频 {video.id} 尺寸 {video.height}x{video.width} 小于片段尺寸 {side}x{side}")

    frame_indices = select_frames(video, cfg.cubes_t, cfg.frames_per_cube, cfg.seed, force_zero_offsets)
    origins = _cell_offsets(cfg, video.height, video.width, force_zero_offsets)

    # 每个输出像素的源行列: 小块左上角 + 块内坐标
    within = np.arange(side) % cfg.patch
    origin_rows = np.repeat(np.repeat(origins[..., 0], cfg.patch, axis=1), cfg.patch, axis=2)
    origin_cols = np.repeat(np.repeat(origins[..., 1], cfg.patch, axis=1), cfg.patch, axis=2)
    rows = origin_rows + within[None, :, None]
    cols = origin_cols + within[None, None, :]

    cube_of_frame = np.arange(cfg.clip_len) // cfg.frames_per_cube
    src_frames = np.asarray(frame_indices)[:, None, None]
    src_rows = rows[cube_of_frame]
    src_cols = cols[cube_of_frame]

    tensor = video.frames[src_frames, src_rows, src_cols]
    sample_map = np.stack(np.broadcast_arrays(src_frames, src_rows, src_cols), axis=-1).astype(np.int32)
    logger.debug(f"采样片段: video={video.id}, frames={frame_indices}, side={side}")
    return FragmentClip(tensor=tensor, sample_map=sample_map, frame_indices=frame_indices, cell_origins=origins)


def resize_aesthetic(video: RawVideo,
                     side: int,
                     temporal: SamplerConfig,
                     force_zero_offsets: bool = False) -> AestheticClip:
    """
    美学分支输入: 对与片段相同的帧做双线性缩放

    :param video: 原始视频
    :param side: 输出边长
    :param temporal: 提供时间采样参数与种子
    :param force_zero_offsets: 与 sample_fragment 保持一致的测试开关
    """
    if side < 1:
        raise ContractError(f"缩放边长必须为正, 当前值: {side}")
    frame_indices = select_frames(video, temporal.cubes_t, temporal.frames_per_cube, temporal.seed,
                                  force_zero_offsets)
    resized = [
        cv2.resize(video.frames[i].astype(np.float32), (side, side), interpolation=cv2.INTER_LINEAR)
        for i in frame_indices
    ]
    tensor = np.clip(np.stack(resized, axis=0), 0.0, 255.0).astype(np.float32)
    return AestheticClip(tensor=tensor, frame_indices=frame_indices)


def fragment_geometry(cfg: SamplerConfig) -> FragmentGeometry:
    """片段中每个像素所属的小块编号, 以及每帧所属的立方体编号"""
    cells = np.arange(cfg.side) // cfg.patch
    cell_id = cells[:, None] * cfg.grid_s + cells[None, :]
    cube_id = np.arange(cfg.clip_len) // cfg.frames_per_cube
    return FragmentGeometry(cell_id=cell_id, cube_id=cube_id)


def normalize_clip(clip: np.ndarray, dtype: Optional[np.dtype] = np.float32) -> np.ndarray:
    """像素归一化: (v - 127.5) / 127.5"""
    return ((np.asarray(clip, dtype=np.float64) - 127.5) / 127.5).astype(dtype)


def stack_clips(clips: Sequence[Union[FragmentClip, AestheticClip]], dtype=np.float32) -> np.ndarray:
    """把若干 clip 归一化后堆叠成 [B, Tc, S, S, 3] 批"""
    if not clips:
        raise ContractError("clip 列表为空")
    return np.stack([normalize_clip(c.tensor, dtype=dtype) for c in clips], axis=0)
