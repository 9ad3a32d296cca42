#  Base configuration for the twinvqa application
import os

DEBUG = False
LOG_LEVEL = "INFO"
LOG_DIR = None

# 所有命令行输出的默认根目录
OUTPUT_DIR = os.environ.get("TWINVQA_OUTPUT_DIR", "./runs")

# 组合损失中单调性损失的权重
LOSS_LAMBDA = 0.3

# 片段采样 (全尺寸: 7 x 32 = 224)
SAMPLER = {
    "grid_s": 7,
    "patch": 32,
    "cubes_t": 4,
    "frames_per_cube": 4,
    "seed": 0,
}

# 片段采样 (桌面规模: 4 x 16 = 64)
TOY_SAMPLER = {
    "grid_s": 4,
    "patch": 16,
    "cubes_t": 2,
    "frames_per_cube": 2,
    "seed": 0,
}

# 桌面规模骨干网络: 2 个 stage x 2 个 block
TOY_BACKBONE = {
    "stages": [
        {"blocks": 2, "channels": 32, "heads": 2},
        {"blocks": 2, "channels": 64, "heads": 4},
    ],
    "window": 4,
    "patch_embed": {"spatial": 4, "temporal": 2},
    "input_side": 64,
    "clip_len": 4,
    "mlp_ratio": 4,
}

OPTIMIZER = {
    "lr": 1e-3,
    "betas": [0.9, 0.999],
    "eps": 1e-8,
    "weight_decay": 1e-4,
    "epochs": 30,
    "batch_size": 8,
}

PRETRAIN = {
    "enabled": False,
    "epochs": 10,
    "lr": 1e-3,
}

# 合成数据集
CORPUS = {
    "train_size": 256,
    "test_size": 64,
    "frames": 4,
    "height": 64,
    "width": 64,
    "low_res_height": 32,
    "low_res_width": 32,
    "low_res_fraction": 0.25,
    "fps": 8.0,
}

# 评估时并行准备样本的线程数
PREFETCH_WORKERS = 4
