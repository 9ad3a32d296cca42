from .base import *

# Production specific configuration
DEBUG = False
LOG_LEVEL = "INFO"
LOG_DIR = "/var/log/twinvqa"
OUTPUT_DIR = "/data/twinvqa/runs"
