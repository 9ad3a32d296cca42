import abc
import logging
from pathlib import Path
from typing import Any, Dict, List

from utils.custom_logger import CustomLogger

# 配置日志
logger = CustomLogger(
    name="base_storage",
    log_level=logging.WARNING,
    )


class BaseStorage(metaclass=abc.ABCMeta):
    """存储基类, 定义本地文件存储组件的通用接口"""

    def __init__(self, config: Dict[str, Any]):
        """
        初始化存储组件

        :param config: 存储配置字典, 至少包含 root
        """
        self.config = config
        self.root = Path(config.get("root", "."))
        self.connected = False
        self.logger = logger

    def connect(self) -> bool:
        """
        准备存储目录

        :return: 目录可用返回 True
        """
        self.root.mkdir(parents=True, exist_ok=True)
        self.connected = True
        return True

    def disconnect(self) -> None:
        self.connected = False

    def path(self, key: str) -> Path:
        """键对应的路径 (相对 root)"""
        return self.root / key

    def exists(self, key: str) -> bool:
        return self.path(key).exists()

    @abc.abstractmethod
    def save(self, key: str, obj: Any) -> Path:
        """
        保存对象

        :param key: 存储键
        :param obj: 要保存的对象
        :return: 写入的主文件路径
        """
        pass

    @abc.abstractmethod
    def load(self, key: str) -> Any:
        """
        读取对象

        :param key: 存储键
        :return: 读取的对象
        """
        pass

    @abc.abstractmethod
    def list_keys(self) -> List[str]:
        """列出 root 下所有可读取的键"""
        pass

    def __enter__(self):
        self.connect()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.disconnect()
