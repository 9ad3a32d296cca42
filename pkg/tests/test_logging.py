"""
日志系统测试
"""
import logging

import pytest

from utils.custom_logger import CustomFormatter, CustomLogger, get_logger


@pytest.mark.unit
class TestCustomLogger:
    """控制台与文件输出"""

    def test_console_writes_to_stderr(self, capsys):
        """控制台日志只写标准错误, 标准输出留给 JSON 结果"""
        logger = CustomLogger(name="stderr_sink", log_level=logging.INFO)
        logger.info("epoch 1 done")
        captured = capsys.readouterr()
        assert "epoch 1 done" in captured.err
        assert "stderr_sink" in captured.err
        assert captured.out == ""

    def test_level_filters_messages(self, capsys):
        logger = CustomLogger(name="level_filter", log_level=logging.WARNING)
        logger.info("hidden")
        logger.warning("shown")
        err = capsys.readouterr().err
        assert "hidden" not in err
        assert "[WARN ]" in err

    def test_file_output(self, temp_dir):
        logger = CustomLogger(name="file_sink", log_level=logging.INFO, log_dir=str(temp_dir),
                              file_name="run", enable_console=False)
        logger.info("checkpoint saved")
        content = (temp_dir / "run.log").read_text()
        assert "checkpoint saved" in content
        assert "test_logging.py:" in content
        assert "test_file_output()" in content

    def test_no_file_without_log_dir(self):
        logger = CustomLogger(name="console_only", enable_console=False)
        assert logger.handlers == []

    def test_exception_is_formatted(self, capsys):
        logger = CustomLogger(name="exc_trace", log_level=logging.INFO)
        try:
            1 / 0
        except ZeroDivisionError:
            logger.error("step failed", exc_info=True)
        err = capsys.readouterr().err
        assert "step failed" in err
        assert "ZeroDivisionError" in err


@pytest.mark.unit
class TestFormatter:

    def test_console_format(self):
        record = logging.LogRecord("service.tasks.train_tasks", logging.INFO, "train_tasks.py", 10,
                                   "[abcdef12] epoch %d", (3,), None)
        line = CustomFormatter(use_color=False, console_mode=True).format(record)
        assert line.endswith("[INFO ] train_tasks - [abcdef12] epoch 3")

    def test_file_format(self):
        record = logging.LogRecord("eval_tasks", logging.WARNING, "/x/eval_tasks.py", 42, "constant vector",
                                   None, None, func="evaluate")
        line = CustomFormatter(use_color=False, console_mode=False).format(record)
        assert " - WARNING - eval_tasks.py:42 - evaluate() - constant vector" in line


@pytest.mark.unit
class TestGetLogger:

    def test_reads_environment_settings(self):
        """test 环境: WARNING, 不写文件"""
        logger = get_logger("cli")
        assert logger.level == logging.WARNING
        assert logger.log_dir is None

    def test_level_override(self):
        assert get_logger("cli", log_level=logging.DEBUG).level == logging.DEBUG
