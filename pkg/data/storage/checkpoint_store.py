"""
检查点: manifest.json + weights.bin

manifest 中张量按名称排序, 每项记录 {name, shape, dtype, offset};
weights.bin 为小端 float32 连续拼接. 运行配置嵌入 manifest.
同一个检查点 保存 -> 读取 -> 保存 得到逐字节相同的文件.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from utils.custom_logger import CustomLogger
from utils.exceptions import CheckpointError

from .base_storage import BaseStorage

logger = CustomLogger(name="checkpoint_store", log_level=logging.WARNING)

FORMAT_NAME = "twinvqa-checkpoint"
FORMAT_VERSION = 1
MANIFEST_FILE = "manifest.json"
WEIGHTS_FILE = "weights.bin"
BLOB_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    """参数快照 + 运行配置"""
    tensors: Dict[str, np.ndarray]
    run_config: Dict[str, Any]
    extra: Dict[str, Any] = field(default_factory=dict)

    def names(self) -> List[str]:
        return sorted(self.tensors)


def _manifest(checkpoint: Checkpoint) -> Dict[str, Any]:
    entries, offset = [], 0
    for name in checkpoint.names():
        array = checkpoint.tensors[name]
        entries.append({"name": name, "shape": list(array.shape), "dtype": BLOB_DTYPE.str, "offset": offset})
        offset += int(array.size) * BLOB_DTYPE.itemsize
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "run_config": checkpoint.run_config,
        "extra": checkpoint.extra,
        "tensors": entries,
        "total_bytes": offset,
    }


class CheckpointStore(BaseStorage):
    """按目录保存检查点, 每个键一个子目录"""

    def save(self, key: str, checkpoint: Checkpoint) -> Path:
        if not self.connected:
            self.connect()
        return save_checkpoint(self.path(key), checkpoint)

    def load(self, key: str) -> Checkpoint:
        return load_checkpoint(self.path(key))

    def list_keys(self) -> List[str]:
        return sorted(p.parent.name for p in self.root.glob(f"*/{MANIFEST_FILE}"))


def save_checkpoint(directory: Path, checkpoint: Checkpoint) -> Path:
    """
    写检查点

    :param directory: 目标目录 (不存在时创建)
    :return: manifest 路径
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = _manifest(checkpoint)
    with open(directory / WEIGHTS_FILE, "wb") as fh:
        for name in checkpoint.names():
            fh.write(np.ascontiguousarray(checkpoint.tensors[name], dtype=BLOB_DTYPE).tobytes())
    manifest_path = directory / MANIFEST_FILE
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2), encoding="utf-8")
    logger.info(f"保存检查点: {directory} ({len(checkpoint.tensors)} 个张量, {manifest['total_bytes']} 字节)")
    return manifest_path


def load_checkpoint(directory: Path) -> Checkpoint:
    """
    读检查点

    :raises CheckpointError: 文件缺失, 格式不符或字节数不一致
    """
    directory = Path(directory)
    manifest_path, weights_path = directory / MANIFEST_FILE, directory / WEIGHTS_FILE
    if not manifest_path.exists() or not weights_path.exists():
        raise CheckpointError(f"检查点不完整: {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"检查点 manifest 损坏: {e}") from e
    if manifest.get("format") != FORMAT_NAME or manifest.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"不支持的检查点格式: {manifest.get('format')} v{manifest.get('version')}")

    blob = weights_path.read_bytes()
    if len(blob) != manifest.get("total_bytes"):
        raise CheckpointError(f"权重文件字节数 {len(blob)} 与 manifest 记录 {manifest.get('total_bytes')} 不一致")
    tensors: Dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        if np.dtype(entry["dtype"]) != BLOB_DTYPE:
            raise CheckpointError(f"张量 {entry['name']} 的类型 {entry['dtype']} 不受支持")
        count = int(np.prod(entry["shape"], dtype=np.int64))
        values = np.frombuffer(blob, dtype=BLOB_DTYPE, count=count, offset=entry["offset"])
        tensors[entry["name"]] = values.reshape(entry["shape"]).astype(np.float32)
    return Checkpoint(tensors=tensors, run_config=manifest["run_config"], extra=manifest.get("extra", {}))
