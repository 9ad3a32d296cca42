from .base import *

# Development specific configuration
DEBUG = True
LOG_LEVEL = "DEBUG"
LOG_DIR = "./logs"
