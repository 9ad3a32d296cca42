"""
上下文相关的质量标签

与场景内容相符的失真 (暗场景变暗, 快速运动场景模糊) 只轻微降分,
其余失真按强度大幅降分.
"""
from dataclasses import dataclass
from typing import Any, Dict

from data.video import RawVideo

from .distortions import DistortionSpec

BASE_LABEL = 80.0
INCONGRUENT_PENALTY = 60.0
CONGRUENT_PENALTY = 10.0

CONGRUENT_PAIRS = frozenset({
    ("dark_natural", "brightness_drop"),
    ("fast_motion_natural", "gaussian_blur"),
})


def is_congruent(scene_class: str, kind: str) -> bool:
    return (scene_class, kind) in CONGRUENT_PAIRS


def label(scene_class: str, d: DistortionSpec) -> float:
    """质量标签 ∈ [0, 100], 对强度单调不增"""
    penalty = CONGRUENT_PENALTY if is_congruent(scene_class, d.kind) else INCONGRUENT_PENALTY
    return float(min(max(BASE_LABEL - penalty * d.severity, 0.0), 100.0))


@dataclass
class LabeledVideo:
    """带标签和来源记录的视频"""
    video: RawVideo
    label: float
    scene_class: str
    distortion: DistortionSpec
    scene_seed: int = 0
    resolution_group: str = "high"

    @property
    def id(self) -> str:
        return self.video.id

    @property
    def congruent(self) -> bool:
        return is_congruent(self.scene_class, self.distortion.kind)

    def record(self) -> Dict[str, Any]:
        """清单中的一行"""
        return {
            "id": self.video.id,
            "class": self.scene_class,
            "kind": self.distortion.kind,
            "severity": self.distortion.severity,
            "label": self.label,
            "resolution_group": self.resolution_group,
            "congruent": self.congruent,
            "scene_seed": self.scene_seed,
            "distortion_seed": self.distortion.seed,
            "frames": self.video.num_frames,
            "height": self.video.height,
            "width": self.video.width,
            "fps": self.video.fps,
        }
