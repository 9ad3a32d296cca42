"""
异常体系

所有业务异常都继承 TwinVQAError, CLI 根据类型决定退出码:
ConfigError / ContractError -> 2, 其他 TwinVQAError -> 1
"""
from typing import Sequence


class TwinVQAError(Exception):
    """项目异常基类"""


class DimensionError(TwinVQAError, ValueError):
    """张量形状不匹配"""

    def __init__(self, message: str, *shapes: Sequence[int]):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = [tuple(s) for s in shapes]


class ContractError(TwinVQAError, ValueError):
    """调用前置条件不满足"""


class InputTooSmallError(ContractError):
    """视频尺寸或帧数小于采样要求"""


class ConfigError(TwinVQAError, ValueError):
    """运行配置无效"""


class CheckpointError(TwinVQAError):
    """检查点损坏或与配置不兼容"""
