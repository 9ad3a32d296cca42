"""
配置模块选择

TWINVQA_ENV=dev|test|prod 决定加载哪一个环境模块, 默认 dev.
"""
import importlib
import os
from types import ModuleType

_ENVIRONMENTS = ("dev", "test", "prod")


def get_settings(env: str = None) -> ModuleType:
    """
    获取当前环境的配置模块

    :param env: 环境名, None 时读取 TWINVQA_ENV
    :return: 配置模块 (模块级常量即配置项)
    """
    env = (env or os.environ.get("TWINVQA_ENV", "dev")).lower()
    if env not in _ENVIRONMENTS:
        raise ValueError(f"未知的运行环境: {env}, 必须是{list(_ENVIRONMENTS)}之一")
    return importlib.import_module(f"config.{env}")
