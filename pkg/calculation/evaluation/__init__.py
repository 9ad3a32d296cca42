from .performance_metrics import STATUS_NOT_A_RESULT, STATUS_OK, CorrelationResult, QualityMetrics
from .visualization import QualityVisualization

__all__ = ["STATUS_NOT_A_RESULT", "STATUS_OK", "CorrelationResult", "QualityMetrics", "QualityVisualization"]
