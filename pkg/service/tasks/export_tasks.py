"""
导出任务

- quality_map: 每个质量图的每个时间切片写成 8 位 PGM (min-max 缩放), 原始数值写 CSV, 并写 JSON 说明
- fragments: 技术分支片段与美学帧写成 P6 PPM, 采样位置写 JSON
"""
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from calculation.evaluation import QualityVisualization
from calculation.model.fusion import QualityMap, merged_map
from calculation.model.vqa_model import prepare_inputs, stack_inputs
from data.sampler.fragment_sampler import SamplerConfig
from data.storage.checkpoint_store import Checkpoint, load_checkpoint
from data.storage.video_store import write_pgm, write_ppm
from data.video import RawVideo
from service.schemas.report import MapSlice, QualityMapSidecar
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger
from utils.exceptions import ContractError

from .common import model_from_checkpoint, run_tag

MID_GRAY = 128


def scale_to_gray(values: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    min-max 缩放到 [0, 255]

    :return: (uint8 图像, 是否为常数图); 常数图整体为 128
    """
    values = np.asarray(values, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if not np.isfinite([low, high]).all():
        raise ContractError("质量图中包含非有限值")
    if high - low <= 0.0:
        return np.full(values.shape, MID_GRAY, dtype=np.uint8), True
    return np.round((values - low) / (high - low) * 255.0).astype(np.uint8), False


class ExportTasks:
    """导出任务类"""

    def __init__(self, logger: Optional[CustomLogger] = None):
        self.logger = logger or CustomLogger(name="export_tasks", log_level=logging.INFO)

    def export_quality_map(self,
                           checkpoint: Union[Checkpoint, Path, str],
                           video: RawVideo,
                           out_dir: Path,
                           plot: bool = False,
                           run_config: Optional[RunConfig] = None) -> QualityMapSidecar:
        """
        导出一个视频的质量图

        :param checkpoint: Checkpoint 或检查点目录
        :param video: 原始视频
        :param out_dir: 输出目录
        :param plot: 是否额外绘制第一个时间切片的对比图
        :param run_config: 采样配置与种子的来源, None 时使用检查点中的配置; 模型结构始终来自检查点
        :return: 写入 quality_map.json 的说明
        """
        if not isinstance(checkpoint, Checkpoint):
            checkpoint = load_checkpoint(Path(checkpoint))
        model, cfg = model_from_checkpoint(checkpoint)
        if run_config is not None:
            cfg = run_config
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        inputs = prepare_inputs(video, cfg.sampler, run_seed=cfg.seed)
        output = model.forward(stack_inputs([inputs]))
        maps: Dict[str, QualityMap] = dict(output.maps)
        if "merged" not in maps and "technical" in maps and "aesthetic" in maps:
            maps["merged"] = merged_map(maps["technical"], maps["aesthetic"])

        slices, rows = [], []
        grid = None
        for name, qmap in maps.items():
            values = qmap.numpy()[0]                                # [T', H', W']
            grid = list(values.shape)
            for t in range(values.shape[0]):
                gray, degenerate = scale_to_gray(values[t])
                file_name = f"{video.id}_{name}_t{t}.pgm"
                write_pgm(out_dir / file_name, gray)
                slices.append(MapSlice(name=name, slice=t, file=file_name, min=float(values[t].min()),
                                       max=float(values[t].max()), degenerate=degenerate))
                if degenerate:
                    self.logger.warning(f"质量图 {name} 切片 {t} 为常数, 以 {MID_GRAY} 输出")
                r, c = np.indices(values[t].shape)
                rows.append(pd.DataFrame({"map": name, "slice": t, "row": r.ravel(), "col": c.ravel(),
                                          "value": values[t].ravel().astype(np.float64)}))

        csv_name = f"{video.id}_quality_map.csv"
        pd.concat(rows, ignore_index=True).to_csv(out_dir / csv_name, index=False)
        sidecar = QualityMapSidecar(video_id=video.id, score=float(output.score.data[0]), grid=grid or [],
                                    slices=slices, csv=csv_name)
        (out_dir / f"{video.id}_quality_map.json").write_text(sidecar.model_dump_json(indent=2), encoding="utf-8")

        if plot:
            try:
                first = {name: qmap.numpy()[0, 0] for name, qmap in maps.items()}
                QualityVisualization.plot_quality_maps(first, video.frames[inputs.aesthetic.frame_indices[0]],
                                                       save_path=str(out_dir / f"{video.id}_quality_map.png"))
            except Exception as e:
                self.logger.error(f"绘制质量图失败: {str(e)}", exc_info=True)

        self.logger.info(f"[{run_tag(cfg)}] 导出质量图 {video.id}: {len(slices)} 个切片, score={sidecar.score:.4f}")
        return sidecar

    def export_fragments(self, video: RawVideo, sampler: SamplerConfig, out_dir: Path,
                         run_seed: Optional[int] = None) -> Dict[str, object]:
        """
        导出片段与美学帧

        :param run_seed: 给定时与训练 / 评估使用相同的逐视频采样种子
        :return: 写入 sample_map.json 的内容
        """
        out_dir = Path(out_dir)
        inputs = prepare_inputs(video, sampler, run_seed=run_seed)
        fragment, aesthetic = inputs.fragment, inputs.aesthetic
        fragment_files, aesthetic_files = [], []
        for t in range(fragment.tensor.shape[0]):
            fragment_files.append(write_ppm(out_dir / "fragments" / f"{t:04d}.ppm", fragment.tensor[t]).name)
            rounded = np.clip(np.round(aesthetic.tensor[t]), 0, 255).astype(np.uint8)
            aesthetic_files.append(write_ppm(out_dir / "aesthetic" / f"{t:04d}.ppm", rounded).name)

        sidecar = {
            "video_id": video.id,
            "video_shape": list(video.frames.shape),
            "sampler": sampler.model_dump(mode="json"),
            "run_seed": run_seed,
            "frame_indices": [int(i) for i in fragment.frame_indices],
            "cell_origins": fragment.cell_origins.astype(int).tolist(),
            "fragment_files": [f"fragments/{name}" for name in fragment_files],
            "aesthetic_files": [f"aesthetic/{name}" for name in aesthetic_files],
        }
        (out_dir / "sample_map.json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
        self.logger.info(f"导出片段 {video.id}: {len(fragment_files)} 帧 -> {out_dir}")
        return sidecar
