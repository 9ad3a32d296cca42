from dataclasses import dataclass

import numpy as np

from utils.exceptions import ContractError


@dataclass
class RawVideo:
    """解码后的视频: frames[T, H, W, 3] uint8 RGB"""
    frames: np.ndarray
    fps: float = 30.0
    id: str = "video"

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise ContractError(f"视频帧必须是 T x H x W x 3, 当前形状: {frames.shape}")
        if frames.shape[0] < 1:
            raise ContractError(f"视频 {self.id} 不包含任何帧")
        if frames.dtype != np.uint8:
            raise ContractError(f"视频帧必须是 uint8, 当前类型: {frames.dtype}")
        self.frames = np.ascontiguousarray(frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def __repr__(self) -> str:
        return f"RawVideo(id='{self.id}', frames={self.frames.shape}, fps={self.fps})"
