"""
Report schemas

Structured records written by the train / eval / ablate / quality-map tasks.
"""
from typing import List, Optional

from pydantic import BaseModel, Field


class EpochRecord(BaseModel):
    """One line of the per-epoch training log"""
    epoch: int = Field(..., ge=1)
    loss: float = Field(..., description="Mean combined loss over the epoch's batches")
    mono: float = Field(..., description="Mean monotonicity loss")
    plcc_loss: float = Field(..., description="Mean PLCC loss")
    train_srcc: Optional[float] = Field(None, description="SRCC on the training corpus, None when not a result")
    train_plcc: Optional[float] = Field(None, description="PLCC on the training corpus, None when not a result")
    seconds: float = Field(..., ge=0)


class GroupMetrics(BaseModel):
    group: str
    count: int = Field(..., ge=0)
    srcc: Optional[float] = None
    plcc: Optional[float] = None
    status: str = "ok"


class EvaluationReport(BaseModel):
    """Result of evaluating one checkpoint on one corpus"""
    mode: str = Field(..., description="full / technical_only / aesthetic_only")
    count: int = Field(..., ge=0)
    srcc: Optional[float] = None
    plcc: Optional[float] = None
    status: str = Field("ok", description="ok or not_a_result")
    reason: str = ""
    groups: List[GroupMetrics] = Field(default_factory=list)
    mean_inference_seconds: float = Field(0.0, ge=0)
    seed: int = 0
    config_hash: str = ""


class AblationRow(BaseModel):
    """One row of the ablation table"""
    row: str
    topology: str
    shared: Optional[bool] = None
    fusion: Optional[str] = None
    pretrained: bool = False
    inference: str = "full"
    srcc: Optional[float] = None
    plcc: Optional[float] = None
    context_srcc: Optional[float] = None
    status: str = "ok"
    params: int = Field(..., ge=0)
    fusion_params: int = Field(0, ge=0)
    seed: int = 0
    config_hash: str = ""


class MapSlice(BaseModel):
    """One exported quality-map image"""
    name: str = Field(..., description="technical / aesthetic / merged / joint")
    slice: int = Field(..., ge=0, description="Temporal token slice")
    file: str
    min: float
    max: float
    degenerate: bool = Field(False, description="Constant map rendered as mid-gray")


class QualityMapSidecar(BaseModel):
    video_id: str
    score: float
    grid: List[int]
    slices: List[MapSlice] = Field(default_factory=list)
    csv: str = ""
