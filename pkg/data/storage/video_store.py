"""
原始视频的本地存储

两种格式:
- rgb8: <key>.rgb8 (T*H*W*3 字节, 行优先 RGB) + <key>.json (尺寸与 fps)
- frames: <key>/ 目录下按序的 P6 PPM 帧 + meta.json
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import cv2
import numpy as np

from data.video import RawVideo
from utils.custom_logger import CustomLogger
from utils.exceptions import ContractError

from .base_storage import BaseStorage

logger = CustomLogger(name="video_store", log_level=logging.WARNING)

FORMATS = ("rgb8", "frames")


def write_ppm(path: Path, rgb: np.ndarray) -> Path:
    """写 P6 PPM, 输入为 [H, W, 3] uint8 RGB"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(np.ascontiguousarray(rgb, dtype=np.uint8), cv2.COLOR_RGB2BGR),
                       [cv2.IMWRITE_PXM_BINARY, 1]):
        raise OSError(f"无法写入 {path}")
    return path


def write_pgm(path: Path, gray: np.ndarray) -> Path:
    """写 P5 PGM, 输入为 [H, W] uint8"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), np.ascontiguousarray(gray, dtype=np.uint8), [cv2.IMWRITE_PXM_BINARY, 1]):
        raise OSError(f"无法写入 {path}")
    return path


def read_ppm(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise ContractError(f"无法读取图像 {path}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


class VideoStore(BaseStorage):
    """RawVideo 的文件存储"""

    def __init__(self, config: Dict[str, Any]):
        """
        :param config: root 目录, format 为 rgb8 或 frames
        """
        super().__init__(config)
        self.format = config.get("format", "rgb8")
        if self.format not in FORMATS:
            raise ContractError(f"视频存储格式必须是{list(FORMATS)}之一, 当前值: {self.format}")

    def save(self, key: str, video: RawVideo) -> Path:
        if not self.connected:
            self.connect()
        if self.format == "rgb8":
            return self._save_rgb8(key, video)
        return self._save_frames(key, video)

    def _save_rgb8(self, key: str, video: RawVideo) -> Path:
        blob = self.path(f"{key}.rgb8")
        blob.parent.mkdir(parents=True, exist_ok=True)
        blob.write_bytes(np.ascontiguousarray(video.frames).tobytes())
        sidecar = {"id": video.id, "frames": video.num_frames, "height": video.height, "width": video.width,
                   "fps": video.fps, "format": "rgb8"}
        self.path(f"{key}.json").write_text(json.dumps(sidecar, sort_keys=True, indent=2), encoding="utf-8")
        return blob

    def _save_frames(self, key: str, video: RawVideo) -> Path:
        directory = self.path(key)
        directory.mkdir(parents=True, exist_ok=True)
        for index, frame in enumerate(video.frames):
            write_ppm(directory / f"frame_{index:05d}.ppm", frame)
        meta = {"id": video.id, "frames": video.num_frames, "fps": video.fps, "format": "frames"}
        (directory / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2), encoding="utf-8")
        return directory

    def load(self, key: str) -> RawVideo:
        return load_video(self.path(key))

    def list_keys(self) -> List[str]:
        keys = [p.stem for p in self.root.glob("*.rgb8")]
        keys += [p.parent.name for p in self.root.glob("*/meta.json")]
        return sorted(keys)


def load_video(path: Path, fps: Optional[float] = None) -> RawVideo:
    """
    读取原始视频, 按路径自动识别格式

    :param path: 帧目录, 或 .rgb8 / .json 文件 (也可省略扩展名)
    :param fps: 覆盖存储中的 fps
    :raises ContractError: 路径不存在或数据与描述不一致
    """
    path = Path(path)
    if path.is_dir():
        frame_paths = sorted(path.glob("*.ppm"))
        if not frame_paths:
            raise ContractError(f"目录 {path} 中没有 PPM 帧")
        meta_path = path / "meta.json"
        meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
        frames = np.stack([read_ppm(p) for p in frame_paths])
        return RawVideo(frames=frames, fps=fps or meta.get("fps", 30.0), id=meta.get("id", path.name))

    stem = path.with_suffix("") if path.suffix in (".rgb8", ".json") else path
    blob, sidecar_path = stem.with_suffix(".rgb8"), stem.with_suffix(".json")
    if not blob.exists() or not sidecar_path.exists():
        raise ContractError(f"找不到视频 {path} (需要 .rgb8 与 .json)")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    shape = (sidecar["frames"], sidecar["height"], sidecar["width"], 3)
    data = np.frombuffer(blob.read_bytes(), dtype=np.uint8)
    if data.size != int(np.prod(shape)):
        raise ContractError(f"视频 {blob} 字节数 {data.size} 与描述 {shape} 不一致")
    return RawVideo(frames=data.reshape(shape).copy(), fps=fps or sidecar.get("fps", 30.0),
                    id=sidecar.get("id", stem.name))
