"""
强度可控的技术失真

强度 s ∈ [0, 1], s = 0 时原样返回.
"""
import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from data.video import RawVideo
from utils.rng import SplittableRNG

DISTORTION_KINDS = ("gaussian_blur", "additive_noise", "brightness_drop", "block_artifact")

MAX_BLUR_SIGMA = 3.0
MAX_NOISE_SIGMA = 25.0
MAX_BRIGHTNESS_DROP = 0.7
BLOCK_SIZE = 8


class DistortionSpec(BaseModel):
    """失真参数"""
    model_config = ConfigDict(frozen=True)

    kind: str
    severity: float = Field(0.0, ge=0.0, le=1.0)
    seed: int = Field(0, ge=0, lt=2 ** 64, description="噪声种子")

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v: str) -> str:
        if v not in DISTORTION_KINDS:
            raise ValueError(f"失真类型必须是{list(DISTORTION_KINDS)}之一")
        return v


def blur_sigma(severity: float) -> float:
    return MAX_BLUR_SIGMA * severity


def noise_sigma(severity: float) -> float:
    """加性噪声标准差 σ(s), 单位为 8 位灰度级"""
    return MAX_NOISE_SIGMA * severity


def _to_uint8(frames: np.ndarray) -> np.ndarray:
    return np.clip(np.round(frames), 0, 255).astype(np.uint8)


def _gaussian_blur(frames: np.ndarray, severity: float) -> np.ndarray:
    sigma = blur_sigma(severity)
    blurred = [cv2.GaussianBlur(f.astype(np.float32), (0, 0), sigmaX=sigma, sigmaY=sigma,
                                borderType=cv2.BORDER_REFLECT) for f in frames]
    return _to_uint8(np.stack(blurred))


def _additive_noise(frames: np.ndarray, severity: float, seed: int) -> np.ndarray:
    rng = SplittableRNG(seed, name="noise").generator()
    noise = rng.normal(0.0, noise_sigma(severity), size=frames.shape)
    return _to_uint8(frames.astype(np.float64) + noise)


def _brightness_drop(frames: np.ndarray, severity: float) -> np.ndarray:
    return _to_uint8(frames.astype(np.float64) * (1.0 - MAX_BRIGHTNESS_DROP * severity))


def _block_artifact(frames: np.ndarray, severity: float) -> np.ndarray:
    """块均值化 (缩小后最近邻放大) 与原图按强度混合"""
    height, width = frames.shape[1:3]
    small = (max(width // BLOCK_SIZE, 1), max(height // BLOCK_SIZE, 1))
    out = []
    for f in frames:
        blocks = cv2.resize(f.astype(np.float32), small, interpolation=cv2.INTER_AREA)
        blocky = cv2.resize(blocks, (width, height), interpolation=cv2.INTER_NEAREST)
        out.append((1.0 - severity) * f.astype(np.float32) + severity * blocky)
    return _to_uint8(np.stack(out))


def distort(video: RawVideo, d: DistortionSpec) -> RawVideo:
    """
    施加失真

    :param video: 原始视频
    :param d: 失真参数
    :return: 新的 RawVideo; severity 为 0 时逐位相同
    """
    if d.severity == 0.0:
        return RawVideo(frames=video.frames.copy(), fps=video.fps, id=video.id)
    if d.kind == "gaussian_blur":
        frames = _gaussian_blur(video.frames, d.severity)
    elif d.kind == "additive_noise":
        frames = _additive_noise(video.frames, d.severity, d.seed)
    elif d.kind == "brightness_drop":
        frames = _brightness_drop(video.frames, d.severity)
    else:
        frames = _block_artifact(video.frames, d.severity)
    return RawVideo(frames=frames, fps=video.fps, id=video.id)


def gradient_energy(video: RawVideo) -> float:
    """高频能量代理: 灰度图 Sobel 梯度幅值平方的均值"""
    energy = 0.0
    for frame in video.frames:
        gray = cv2.cvtColor(frame, cv2.COLOR_RGB2GRAY).astype(np.float32)
        gx = cv2.Sobel(gray, cv2.CV_32F, 1, 0, ksize=3)
        gy = cv2.Sobel(gray, cv2.CV_32F, 0, 1, ksize=3)
        energy += float(np.mean(gx * gx + gy * gy))
    return energy / video.num_frames
