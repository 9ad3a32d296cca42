from .ablation_tasks import AblationTasks, ablation_configs
from .data_tasks import DataTasks
from .eval_tasks import EvalTasks, EvaluationResult
from .experiment_tasks import ExperimentTasks
from .export_tasks import ExportTasks, scale_to_gray
from .pretrain_tasks import PretrainResult, PretrainTasks
from .train_tasks import TrainResult, TrainTasks

__all__ = [
    "AblationTasks", "ablation_configs", "DataTasks", "EvalTasks", "EvaluationResult", "ExperimentTasks", "ExportTasks",
    "scale_to_gray", "PretrainResult", "PretrainTasks", "TrainResult", "TrainTasks",
]
