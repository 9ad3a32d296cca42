"""
测试配置和共享fixtures
"""
import os

os.environ.setdefault("TWINVQA_ENV", "test")

import shutil  # noqa: E402
import tempfile  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from calculation.model.backbone import BackboneConfig  # noqa: E402
from calculation.model.vqa_model import ModelConfig  # noqa: E402
from data.sampler.fragment_sampler import SamplerConfig  # noqa: E402
from data.synthetic import CorpusConfig, build_corpus  # noqa: E402
from data.video import RawVideo  # noqa: E402
from service.schemas.run_config import DataConfig, OptimizerConfig, PretrainConfig, RunConfig  # noqa: E402

# 最小结构: 32x32 输入, 两个 stage, 每个 stage 一个 block
TINY_BACKBONE = {
    "stages": [
        {"blocks": 1, "channels": 8, "heads": 2},
        {"blocks": 1, "channels": 16, "heads": 2},
    ],
    "window": 4,
    "patch_embed": {"spatial": 8, "temporal": 2},
    "input_side": 32,
    "clip_len": 4,
    "mlp_ratio": 2,
}

TINY_SAMPLER = {"grid_s": 4, "patch": 8, "cubes_t": 2, "frames_per_cube": 2, "seed": 0}


@pytest.fixture
def temp_dir():
    """
    创建临时目录用于测试

    Returns:
        Path: 临时目录路径
    """
    temp_dir = Path(tempfile.mkdtemp())
    yield temp_dir
    # 清理临时目录
    shutil.rmtree(temp_dir)


@pytest.fixture
def tiny_backbone() -> BackboneConfig:
    return BackboneConfig(**TINY_BACKBONE)


@pytest.fixture
def tiny_sampler() -> SamplerConfig:
    return SamplerConfig(**TINY_SAMPLER)


@pytest.fixture
def toy_sampler() -> SamplerConfig:
    """桌面规模采样 (64 x 64, 4 帧)"""
    return SamplerConfig.toy()


@pytest.fixture
def tiny_corpus_config() -> CorpusConfig:
    return CorpusConfig(train_size=8, test_size=8, frames=4, height=48, width=48, low_res_height=32,
                        low_res_width=32, low_res_fraction=0.25, fps=8.0, seed=7)


@pytest.fixture
def tiny_run_config(tiny_backbone, tiny_sampler, tiny_corpus_config) -> RunConfig:
    """
    训练 / 评估测试用的最小运行配置

    Returns:
        RunConfig: 2 轮, batch 4
    """
    return RunConfig(
        model=ModelConfig(backbone=tiny_backbone),
        sampler=tiny_sampler,
        optimizer=OptimizerConfig(lr=1e-3, epochs=2, batch_size=4),
        data=DataConfig(corpus=tiny_corpus_config),
        pretrain=PretrainConfig(enabled=False, epochs=1, lr=1e-3),
        seed=3,
    )


@pytest.fixture
def tiny_train_corpus(tiny_corpus_config):
    return build_corpus(tiny_corpus_config, "train", workers=1)


@pytest.fixture
def tiny_test_corpus(tiny_corpus_config):
    return build_corpus(tiny_corpus_config, "context_test", workers=1)


@pytest.fixture
def random_video():
    """
    随机像素视频, 8 帧 80 x 96

    Returns:
        RawVideo
    """
    rng = np.random.default_rng(42)
    frames = rng.integers(0, 256, size=(8, 80, 96, 3), dtype=np.uint8)
    return RawVideo(frames=frames, fps=24.0, id="random")


@pytest.fixture
def coordinate_video():
    """
    像素值编码坐标的视频: R = 帧号, G = 行 mod 256, B = 列 mod 256

    Returns:
        RawVideo: 6 帧 70 x 90
    """
    t, h, w = np.meshgrid(np.arange(6), np.arange(70), np.arange(90), indexing="ij")
    frames = np.stack([t, h % 256, w % 256], axis=-1).astype(np.uint8)
    return RawVideo(frames=frames, fps=30.0, id="coords")
