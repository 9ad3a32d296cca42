"""
Pydantic schemas for run configuration and task reports
"""

from service.schemas.report import (
    AblationRow,
    EpochRecord,
    EvaluationReport,
    GroupMetrics,
    MapSlice,
    QualityMapSidecar,
)
from service.schemas.run_config import DataConfig, OptimizerConfig, PretrainConfig, RunConfig

__all__ = [
    # Run configuration
    "DataConfig",
    "OptimizerConfig",
    "PretrainConfig",
    "RunConfig",

    # Reports
    "AblationRow",
    "EpochRecord",
    "EvaluationReport",
    "GroupMetrics",
    "MapSlice",
    "QualityMapSidecar",
]
