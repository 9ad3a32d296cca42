from .base import *

# Test specific configuration
DEBUG = True
LOG_LEVEL = "WARNING"
LOG_DIR = None

# 测试中只用小语料
CORPUS = {
    **CORPUS,
    "train_size": 16,
    "test_size": 8,
}

PREFETCH_WORKERS = 1
