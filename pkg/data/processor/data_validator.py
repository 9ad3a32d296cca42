import logging
from typing import List

import numpy as np
import pandas as pd

from data.video import RawVideo
from utils.custom_logger import CustomLogger

logger = CustomLogger(name="data_validator", log_level=logging.WARNING)

MANIFEST_COLUMNS = ["id", "class", "kind", "severity", "label", "resolution_group"]


class DataValidator:
    """Corpus and video validation utility class"""

    @staticmethod
    def validate_columns(data: pd.DataFrame, required_columns: List[str]) -> bool:
        """Check if required columns exist"""
        missing = [col for col in required_columns if col not in data.columns]
        if missing:
            logger.error(f"Missing columns: {missing}")
            return False
        return True

    @staticmethod
    def validate_manifest(manifest: pd.DataFrame) -> bool:
        """Check manifest columns, unique ids and value ranges"""
        if not DataValidator.validate_columns(manifest, MANIFEST_COLUMNS):
            return False
        if manifest["id"].duplicated().any():
            logger.error(f"Duplicate video ids: {manifest.loc[manifest['id'].duplicated(), 'id'].tolist()[:5]}")
            return False
        if not manifest["label"].between(0.0, 100.0).all():
            logger.error("Labels outside [0, 100]")
            return False
        if not manifest["severity"].between(0.0, 1.0).all():
            logger.error("Severities outside [0, 1]")
            return False
        return True

    @staticmethod
    def check_video(video: RawVideo, min_side: int, min_frames: int) -> bool:
        """Check that a video can be sampled at the given fragment side and clip length"""
        if video.height < min_side or video.width < min_side:
            logger.warning(f"视频 {video.id} 尺寸 {video.height}x{video.width} 小于 {min_side}")
            return False
        if video.num_frames < min_frames:
            logger.warning(f"视频 {video.id} 只有 {video.num_frames} 帧, 需要 {min_frames}")
            return False
        return True

    @staticmethod
    def check_outliers(scores: np.ndarray, threshold: float = 3.0) -> np.ndarray:
        """Indices of predictions whose Z-score exceeds threshold"""
        scores = np.asarray(scores, dtype=np.float64)
        std = scores.std()
        if std == 0:
            return np.array([], dtype=np.int64)
        outliers = np.flatnonzero(np.abs((scores - scores.mean()) / std) > threshold)
        if outliers.size:
            logger.warning(f"Found {outliers.size} outlier predictions")
        return outliers
