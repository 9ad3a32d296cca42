"""
统一日志系统 - 控制台简洁彩色输出, 文件详细输出

训练、评估、消融等长任务都通过 CustomLogger 输出, 格式见 docs/operational/logging.md
"""
import logging
import os
import sys
from datetime import datetime
from typing import Optional, Union

import colorama

colorama.init(autoreset=True)


class CustomFormatter(logging.Formatter):
    """
    日志格式化器

    控制台: HH:MM:SS [LEVEL] module - message (带颜色)
    文件:   YYYY-MM-DD HH:MM:SS - LEVEL - file.py:line - func() - message
    """

    LEVEL_COLORS = {
        logging.DEBUG: colorama.Fore.CYAN,
        logging.INFO: colorama.Fore.GREEN,
        logging.WARNING: colorama.Fore.YELLOW,
        logging.ERROR: colorama.Fore.RED,
        logging.CRITICAL: colorama.Back.RED + colorama.Fore.WHITE,
    }

    LEVEL_NAMES = {
        logging.DEBUG: "DEBUG",
        logging.INFO: "INFO ",
        logging.WARNING: "WARN ",
        logging.ERROR: "ERROR",
        logging.CRITICAL: "CRIT ",
    }

    def __init__(self, use_color: bool = True, console_mode: bool = True):
        """
        :param use_color: 是否着色 (仅控制台模式生效)
        :param console_mode: True 为控制台格式, False 为文件格式
        """
        super().__init__()
        self.console_mode = console_mode
        self.use_color = use_color and console_mode

    def format(self, record: logging.LogRecord) -> str:
        if not self.console_mode:
            return self._format_file(record)

        timestamp = datetime.fromtimestamp(record.created).strftime("%H:%M:%S")
        level_name = self.LEVEL_NAMES.get(record.levelno, record.levelname)
        module_name = record.name.rsplit(".", 1)[-1]
        line = f"{timestamp} [{level_name}] {module_name} - {record.getMessage()}"
        if record.exc_info:
            line = f"{line}\n{self.formatException(record.exc_info)}"

        if self.use_color and record.levelno in self.LEVEL_COLORS:
            line = self.LEVEL_COLORS[record.levelno] + line + colorama.Style.RESET_ALL
        return line

    def _format_file(self, record: logging.LogRecord) -> str:
        timestamp = self.formatTime(record, "%Y-%m-%d %H:%M:%S")
        filename = os.path.basename(record.pathname)
        line = (f"{timestamp} - {record.levelname:5} - {filename}:{record.lineno} - "
                f"{record.funcName}() - {record.getMessage()}")
        if record.exc_info:
            line = f"{line}\n{self.formatException(record.exc_info)}"
        return line


class CustomLogger(logging.Logger):
    """
    自定义日志类

    1. 控制台输出简洁、颜色化
    2. 配置 log_dir 时同时写入按日期命名的日志文件
    """

    def __init__(
        self,
        name: str,
        log_level: Union[int, str] = logging.INFO,
        log_dir: Optional[str] = None,
        file_name: Optional[str] = None,
        enable_console: bool = True,
        enable_file: bool = True,
    ):
        """
        :param name: 日志器名称, 一般为模块名
        :param log_level: 日志级别
        :param log_dir: 日志目录, None 表示只输出到控制台
        :param file_name: 日志文件名 (不含扩展名), 默认 <日期>_<name>
        :param enable_console: 是否输出到控制台
        :param enable_file: 是否输出到文件
        """
        super().__init__(name, log_level)
        self.log_dir = log_dir
        self.enable_console = enable_console
        self.enable_file = enable_file and log_dir is not None
        self.base_file_name = file_name or f"{datetime.now().strftime('%Y%m%d')}_{name}"
        self._configure_handlers()

    def _configure_handlers(self) -> None:
        """配置日志处理器"""
        self.handlers.clear()

        if self.enable_console:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(CustomFormatter(use_color=True, console_mode=True))
            console_handler.setLevel(self.level)
            self.addHandler(console_handler)

        if self.enable_file:
            os.makedirs(self.log_dir, exist_ok=True)
            file_handler = logging.FileHandler(os.path.join(self.log_dir, f"{self.base_file_name}.log"))
            file_handler.setFormatter(CustomFormatter(use_color=False, console_mode=False))
            file_handler.setLevel(self.level)
            self.addHandler(file_handler)


def get_logger(name: str, log_level: Optional[Union[int, str]] = None) -> CustomLogger:
    """
    按当前环境配置创建日志器

    :param name: 日志器名称
    :param log_level: 覆盖配置中的 LOG_LEVEL
    :return: CustomLogger 实例
    """
    from config import get_settings

    settings = get_settings()
    return CustomLogger(
        name=name,
        log_level=log_level or getattr(settings, "LOG_LEVEL", logging.INFO),
        log_dir=getattr(settings, "LOG_DIR", None),
    )
