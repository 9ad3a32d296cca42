"""
程序化场景生成

每个场景类别是一组正弦纹理在画面上平移:
- bright_texture: 高亮度, 细纹理, 慢速平移
- dark_natural: 低频自然纹理, 整体偏暗
- fast_motion_natural: 自然纹理, 每帧大幅平移
- static_flat: 纯色, 所有帧完全相同
"""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from data.video import RawVideo
from utils.rng import SplittableRNG

SCENE_CLASSES = ("bright_texture", "dark_natural", "fast_motion_natural", "static_flat")

# (平均亮度, 纹理幅度, 每帧平移像素范围, 纹理频率范围 [周期/像素])
_SCENE_STYLE = {
    "bright_texture": (170.0, 55.0, (0.5, 1.5), (0.08, 0.25)),
    "dark_natural": (40.0, 22.0, (0.5, 1.5), (0.01, 0.06)),
    "fast_motion_natural": (120.0, 50.0, (8.0, 12.0), (0.01, 0.06)),
}


class SceneSpec(BaseModel):
    """场景参数; 生成结果只取决于这些字段"""
    model_config = ConfigDict(frozen=True)

    scene_class: str
    seed: int = Field(0, ge=0, lt=2 ** 64)
    frames: int = Field(4, ge=1)
    height: int = Field(128, ge=1)
    width: int = Field(128, ge=1)

    @field_validator("scene_class")
    @classmethod
    def validate_scene_class(cls, v: str) -> str:
        if v not in SCENE_CLASSES:
            raise ValueError(f"场景类别必须是{list(SCENE_CLASSES)}之一")
        return v


def _texture(rng: np.random.Generator, freq_range: Tuple[float, float],
             components: int = 6) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """随机正弦分量参数: 频率, 方向, 相位, 幅度 (1/f 衰减)"""
    freqs = rng.uniform(freq_range[0], freq_range[1], size=components)
    angles = rng.uniform(0.0, np.pi, size=components)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=components)
    amps = 1.0 / (1.0 + np.arange(components))
    amps /= amps.sum()
    return freqs, angles, phases, amps


def gen_scene(spec: SceneSpec) -> RawVideo:
    """
    生成场景视频

    :param spec: 场景参数
    :return: RawVideo, frames[T, H, W, 3] uint8
    """
    rng = SplittableRNG(spec.seed, name="scene").split(spec.scene_class).generator()
    video_id = f"{spec.scene_class}-{spec.seed}"

    if spec.scene_class == "static_flat":
        color = rng.uniform(60.0, 200.0, size=3)
        frame = np.broadcast_to(np.round(color).astype(np.uint8), (spec.height, spec.width, 3))
        frames = np.broadcast_to(frame, (spec.frames, spec.height, spec.width, 3)).copy()
        return RawVideo(frames=frames, id=video_id)

    mean, amplitude, speed_range, freq_range = _SCENE_STYLE[spec.scene_class]
    freqs, angles, phases, amps = _texture(rng, freq_range)
    speed = rng.uniform(*speed_range)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    velocity = speed * np.array([np.sin(heading), np.cos(heading)])
    tint = rng.uniform(0.8, 1.2, size=3)

    rows, cols = np.meshgrid(np.arange(spec.height, dtype=np.float64),
                             np.arange(spec.width, dtype=np.float64), indexing="ij")
    frames = np.empty((spec.frames, spec.height, spec.width, 3), dtype=np.uint8)
    for t in range(spec.frames):
        y = rows - velocity[0] * t
        x = cols - velocity[1] * t
        texture = np.zeros_like(rows)
        for f, a, p, w in zip(freqs, angles, phases, amps):
            texture += w * np.sin(2.0 * np.pi * f * (x * np.cos(a) + y * np.sin(a)) + p)
        texture /= max(np.abs(texture).max(), 1e-8)
        pixel = mean + amplitude * texture[..., None] * tint[None, None, :]
        frames[t] = np.clip(np.round(pixel), 0, 255).astype(np.uint8)
    return RawVideo(frames=frames, id=video_id)


def mean_luma(video: RawVideo) -> float:
    """BT.601 亮度均值"""
    weights = np.array([0.299, 0.587, 0.114])
    return float((video.frames.astype(np.float64) @ weights).mean())
