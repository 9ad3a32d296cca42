"""
数据生成任务模块

生成合成语料并写到磁盘, 供 train / eval 通过 data.train_dir / data.test_dir 读取
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from data.synthetic import CorpusConfig, build_corpus, write_corpus
from data.synthetic.corpus import SPLITS
from utils.custom_logger import CustomLogger
from utils.exceptions import ContractError

logger = CustomLogger(
    name="data_tasks",
    log_level=logging.INFO,
)


class DataTasks:
    """数据生成任务类"""

    def __init__(self, workers: Optional[int] = None):
        """
        :param workers: 生成线程数, None 时取配置 PREFETCH_WORKERS
        """
        self.workers = workers

    def generate(self,
                 cfg: CorpusConfig,
                 out_dir: Path,
                 splits: Sequence[str] = SPLITS,
                 fmt: str = "rgb8",
                 task_id: str = "gen-data") -> Dict[str, Any]:
        """
        生成并写出语料

        :param cfg: 语料参数
        :param out_dir: 输出根目录, 每个划分一个子目录
        :param splits: 要生成的划分
        :param fmt: rgb8 或 frames
        :return: 执行结果字典 {split: {"path", "count", "manifest"}}
        """
        unknown = [s for s in splits if s not in SPLITS]
        if unknown:
            raise ContractError(f"未知划分: {unknown}, 必须是{list(SPLITS)}之一")
        logger.info(f"[{task_id}] 开始生成语料: {list(splits)}, seed={cfg.seed}")
        result: Dict[str, Any] = {}
        for split in splits:
            try:
                corpus = build_corpus(cfg, split, workers=self.workers)
                manifest = write_corpus(corpus, Path(out_dir) / split, fmt=fmt)
            except Exception as e:
                logger.error(f"[{task_id}] 生成 {split} 失败: {str(e)}", exc_info=True)
                raise
            result[split] = {"path": str(manifest.parent), "count": len(corpus), "manifest": str(manifest)}
            logger.info(f"[{task_id}] {split}: {len(corpus)} 个视频 -> {manifest.parent}")
        return result
