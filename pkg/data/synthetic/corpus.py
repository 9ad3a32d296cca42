"""
合成语料

- train: (场景类别, 失真类型, 强度) 均匀采样
- context_test: 一半来自相符组合 (暗场景 x 变暗, 快速运动 x 模糊), 一半均匀采样
每个视频按 low_res_fraction 的概率生成为低分辨率组:
以 low_res 尺寸渲染后双线性上采样到统一帧尺寸, 再施加失真.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import cv2
import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from config import get_settings
from data.storage.video_store import VideoStore
from data.video import RawVideo
from utils.custom_logger import CustomLogger
from utils.exceptions import ContractError
from utils.rng import SplittableRNG

from .distortions import DISTORTION_KINDS, DistortionSpec, distort
from .labeling import CONGRUENT_PAIRS, LabeledVideo, label
from .scene_generator import SCENE_CLASSES, SceneSpec, gen_scene

logger = CustomLogger(name="corpus", log_level=logging.INFO)

SPLITS = ("train", "context_test")
MANIFEST_FILE = "manifest.csv"
VIDEO_DIR = "videos"


class CorpusConfig(BaseModel):
    """语料规模与视频尺寸"""
    train_size: int = Field(256, ge=2)
    test_size: int = Field(64, ge=2)
    frames: int = Field(4, ge=1)
    height: int = Field(64, ge=1)
    width: int = Field(64, ge=1)
    low_res_height: int = Field(32, ge=1, description="低分辨率组的渲染尺寸, 上采样到 height x width")
    low_res_width: int = Field(32, ge=1)
    low_res_fraction: float = Field(0.25, ge=0.0, le=1.0)
    fps: float = Field(8.0, gt=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @classmethod
    def from_settings(cls, **overrides) -> "CorpusConfig":
        return cls(**{**get_settings().CORPUS, **overrides})

    def size_of(self, split: str) -> int:
        return self.train_size if split == "train" else self.test_size


@dataclass(frozen=True)
class ItemPlan:
    """一个视频的完整生成参数"""
    video_id: str
    scene: SceneSpec
    distortion: DistortionSpec
    resolution_group: str
    size: Tuple[int, int]   # 输出帧 (H, W)


@dataclass
class Corpus:
    """带标签视频的有序集合"""
    split: str
    items: List[LabeledVideo] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[LabeledVideo]:
        return iter(self.items)

    def __getitem__(self, index: int) -> LabeledVideo:
        return self.items[index]

    @property
    def labels(self) -> np.ndarray:
        return np.array([item.label for item in self.items], dtype=np.float64)

    @property
    def ids(self) -> List[str]:
        return [item.id for item in self.items]

    def manifest(self) -> pd.DataFrame:
        frame = pd.DataFrame([item.record() for item in self.items])
        if not frame.empty:
            frame.insert(1, "split", self.split)
        return frame

    def subset(self, indices) -> "Corpus":
        return Corpus(split=self.split, items=[self.items[i] for i in indices])


def plan_split(cfg: CorpusConfig, split: str) -> List[ItemPlan]:
    """
    生成一个划分的所有视频参数 (纯函数)

    :raises ContractError: 未知划分
    """
    if split not in SPLITS:
        raise ContractError(f"划分必须是{list(SPLITS)}之一, 当前值: {split}")
    root = SplittableRNG(cfg.seed, name="corpus").split(split)
    congruent = sorted(CONGRUENT_PAIRS)
    plans = []
    for index in range(cfg.size_of(split)):
        rng = root.split(index).generator()
        if split == "context_test" and index % 2 == 0:
            scene_class, kind = congruent[int(rng.integers(len(congruent)))]
        else:
            scene_class = SCENE_CLASSES[int(rng.integers(len(SCENE_CLASSES)))]
            kind = DISTORTION_KINDS[int(rng.integers(len(DISTORTION_KINDS)))]
        severity = float(rng.uniform(0.0, 1.0))
        low_res = bool(rng.uniform() < cfg.low_res_fraction)
        height, width = (cfg.low_res_height, cfg.low_res_width) if low_res else (cfg.height, cfg.width)
        scene = SceneSpec(scene_class=scene_class, seed=int(rng.integers(0, 2 ** 63 - 1)), frames=cfg.frames,
                          height=height, width=width)
        distortion = DistortionSpec(kind=kind, severity=severity, seed=int(rng.integers(0, 2 ** 63 - 1)))
        plans.append(ItemPlan(video_id=f"{split}-{index:05d}", scene=scene, distortion=distortion,
                              resolution_group="low" if low_res else "high", size=(cfg.height, cfg.width)))
    return plans


def upscale(video: RawVideo, size: Tuple[int, int]) -> RawVideo:
    """双线性缩放到 (H, W); 尺寸相同时原样返回"""
    height, width = size
    if video.frames.shape[1:3] == (height, width):
        return video
    frames = [cv2.resize(f, (width, height), interpolation=cv2.INTER_LINEAR) for f in video.frames]
    return RawVideo(frames=np.stack(frames), fps=video.fps, id=video.id)


def realize(plan: ItemPlan, fps: float) -> LabeledVideo:
    """按计划生成并失真一个视频"""
    video = distort(upscale(gen_scene(plan.scene), plan.size), plan.distortion)
    video.id, video.fps = plan.video_id, fps
    return LabeledVideo(video=video, label=label(plan.scene.scene_class, plan.distortion),
                        scene_class=plan.scene.scene_class, distortion=plan.distortion,
                        scene_seed=plan.scene.seed, resolution_group=plan.resolution_group)


def build_corpus(cfg: CorpusConfig, split: str, workers: Optional[int] = None) -> Corpus:
    """
    生成语料 (各视频互相独立, 可并行)

    :param cfg: 语料参数
    :param split: train / context_test
    :param workers: 线程数, 默认取配置 PREFETCH_WORKERS
    """
    plans = plan_split(cfg, split)
    workers = workers or get_settings().PREFETCH_WORKERS
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        items = list(pool.map(lambda p: realize(p, cfg.fps), plans))
    logger.info(f"生成语料 {split}: {len(items)} 个视频")
    return Corpus(split=split, items=items)


def write_corpus(corpus: Corpus, directory: Path, fmt: str = "rgb8") -> Path:
    """
    写出语料: videos/<id>.rgb8 + .json (或帧目录) 与 manifest.csv

    :return: manifest 路径
    """
    directory = Path(directory)
    store = VideoStore({"root": directory / VIDEO_DIR, "format": fmt})
    with store:
        for item in corpus:
            store.save(item.id, item.video)
    manifest_path = directory / MANIFEST_FILE
    corpus.manifest().to_csv(manifest_path, index=False)
    logger.info(f"写出语料 {corpus.split}: {len(corpus)} 个视频 -> {directory}")
    return manifest_path


def read_corpus(directory: Path) -> Corpus:
    """
    读取 write_corpus 写出的语料

    :raises ContractError: 缺少 manifest
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.exists():
        raise ContractError(f"找不到语料清单 {manifest_path}")
    manifest = pd.read_csv(manifest_path)
    store = VideoStore({"root": directory / VIDEO_DIR})
    items = []
    for row in manifest.to_dict("records"):
        video = store.load(str(row["id"]))
        distortion = DistortionSpec(kind=row["kind"], severity=float(row["severity"]),
                                    seed=int(row["distortion_seed"]))
        items.append(LabeledVideo(video=video, label=float(row["label"]), scene_class=row["class"],
                                  distortion=distortion, scene_seed=int(row["scene_seed"]),
                                  resolution_group=str(row["resolution_group"])))
    split = str(manifest["split"].iloc[0]) if len(manifest) else "train"
    return Corpus(split=split, items=items)
