"""
任务层公共工具: 输入准备, 批量推理, 模型与检查点互转, 语料加载
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from calculation.model.vqa_model import VideoInputs, VQAModel, prepare_inputs, stack_inputs
from config import get_settings
from data.processor.data_validator import DataValidator
from data.storage.checkpoint_store import Checkpoint
from data.synthetic.corpus import Corpus, build_corpus, read_corpus
from service.schemas.run_config import RunConfig
from utils.custom_logger import CustomLogger
from utils.exceptions import CheckpointError, ContractError
from utils.rng import SplittableRNG

logger = CustomLogger(name="tasks", log_level=logging.INFO)


def run_tag(cfg: RunConfig) -> str:
    """日志前缀: 配置哈希前 8 位"""
    return cfg.config_hash()[:8]


def load_corpus(cfg: RunConfig, split: str) -> Corpus:
    """按配置读取磁盘语料, 未配置目录时在内存中生成"""
    directory = cfg.data.train_dir if split == "train" else cfg.data.test_dir
    if directory:
        corpus = read_corpus(directory)
        if not DataValidator.validate_manifest(corpus.manifest()):
            raise ContractError(f"语料清单校验失败: {directory}")
        return corpus
    return build_corpus(cfg.data.corpus, split)


def prepare_all(corpus: Corpus, cfg: RunConfig, workers: Optional[int] = None) -> List[VideoInputs]:
    """
    并行准备每个视频的两路输入 (结果顺序与语料一致)

    :raises InputTooSmallError: 视频小于片段尺寸
    """
    workers = workers or get_settings().PREFETCH_WORKERS
    for item in corpus:
        DataValidator.check_video(item.video, cfg.sampler.side, cfg.sampler.clip_len)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda item: prepare_inputs(item.video, cfg.sampler, run_seed=cfg.seed), corpus))


def iterate_batches(count: int, batch_size: int, order: Optional[np.ndarray] = None) -> Iterator[np.ndarray]:
    """
    按顺序切分批次; 末尾不足 2 个样本的余数并入上一批

    :param order: 样本顺序, 默认 0..count-1
    """
    order = np.arange(count) if order is None else np.asarray(order)
    bounds = list(range(0, count, batch_size)) + [count]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] < 2:
        bounds.pop(-2)
    for start, end in zip(bounds[:-1], bounds[1:]):
        yield order[start:end]


def shuffled_order(seed: int, epoch: int, count: int, stream: str = "shuffle") -> np.ndarray:
    return SplittableRNG(seed, name=stream).split(epoch).generator().permutation(count)


def predict(model: VQAModel, arrays: Dict[str, np.ndarray], batch_size: int, mode: str = "full") -> np.ndarray:
    """无梯度批量推理, 返回 float64 分数"""
    count = next(iter(arrays.values())).shape[0]
    scores = []
    for index in iterate_batches(count, batch_size):
        batch = {branch: values[index] for branch, values in arrays.items()}
        scores.append(model.infer(batch, mode=mode).data.astype(np.float64))
    return np.concatenate(scores) if scores else np.zeros(0)


def build_arrays(inputs: List[VideoInputs]) -> Dict[str, np.ndarray]:
    return stack_inputs(inputs)


def checkpoint_from_model(model: VQAModel, cfg: RunConfig, extra: Optional[dict] = None) -> Checkpoint:
    return Checkpoint(tensors={name: t.data.astype(np.float32) for name, t in model.store.named_parameters()},
                      run_config=cfg.model_dump(mode="json"),
                      extra=dict(extra or {}))


def config_from_checkpoint(checkpoint: Checkpoint) -> RunConfig:
    """:raises CheckpointError: 检查点中的运行配置无效"""
    try:
        return RunConfig.from_checkpoint_dict(checkpoint.run_config)
    except Exception as e:
        raise CheckpointError(f"检查点中的运行配置无效: {e}") from e


def model_from_checkpoint(checkpoint: Checkpoint) -> Tuple[VQAModel, RunConfig]:
    """
    按检查点中的配置重建模型并载入参数

    :raises CheckpointError: 配置无效或参数不一致
    """
    cfg = config_from_checkpoint(checkpoint)
    model = VQAModel(cfg.model, cfg.sampler, seed=cfg.seed)
    model.store.load_state_dict(checkpoint.tensors, strict=True)
    return model, cfg


def load_initial_weights(model: VQAModel, checkpoint: Checkpoint) -> int:
    """
    迁移训练: 载入检查点中名称与形状都匹配的参数

    :return: 载入的张量个数
    :raises CheckpointError: 没有任何可载入的参数
    """
    state = {name: value for name, value in checkpoint.tensors.items()
             if name in model.store.tensors and model.store.tensors[name].shape == tuple(value.shape)}
    if not state:
        raise CheckpointError("初始化检查点与当前模型没有相同的参数")
    model.store.load_state_dict(state, strict=False)
    logger.info(f"从检查点载入 {len(state)}/{len(model.store.tensors)} 个参数")
    return len(state)
