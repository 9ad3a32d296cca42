"""
Run configuration schemas

One RunConfig fully determines a training / evaluation run. It round-trips exactly
through JSON and is embedded in every checkpoint.
"""
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from calculation.model.vqa_model import ModelConfig
from config import get_settings
from data.sampler.fragment_sampler import SamplerConfig
from data.synthetic.corpus import CorpusConfig
from utils.exceptions import ConfigError


class OptimizerConfig(BaseModel):
    """AdamW settings"""
    lr: float = Field(1e-3, description="Learning rate", ge=0)
    betas: Tuple[float, float] = Field((0.9, 0.999), description="Moment decay rates")
    eps: float = Field(1e-8, description="Numerical stability term", gt=0)
    weight_decay: float = Field(1e-4, description="Decoupled weight decay", ge=0)
    epochs: int = Field(30, description="Training epochs", ge=0)
    batch_size: int = Field(8, description="Videos per optimization step", ge=1)

    @field_validator("betas")
    @classmethod
    def validate_betas(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in v):
            raise ValueError("betas must lie in [0, 1)")
        return v

    @classmethod
    def from_settings(cls, **overrides) -> "OptimizerConfig":
        return cls(**{**get_settings().OPTIMIZER, **overrides})


class PretrainConfig(BaseModel):
    """Synthetic scene-classification pretraining"""
    enabled: bool = Field(False, description="Run pretraining before quality training")
    epochs: int = Field(10, description="Pretraining epochs", ge=0)
    lr: float = Field(1e-3, description="Pretraining learning rate", ge=0)

    @classmethod
    def from_settings(cls, **overrides) -> "PretrainConfig":
        return cls(**{**get_settings().PRETRAIN, **overrides})


class DataConfig(BaseModel):
    """Corpus locations; an empty path means generate in memory"""
    train_dir: Optional[str] = Field(None, description="Directory written by gen-data (train split)")
    test_dir: Optional[str] = Field(None, description="Directory written by gen-data (context_test split)")
    corpus: CorpusConfig = Field(default_factory=CorpusConfig.from_settings)


class RunConfig(BaseModel):
    """Complete run configuration"""
    model: ModelConfig = Field(default_factory=ModelConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig.toy)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig.from_settings)
    data: DataConfig = Field(default_factory=DataConfig)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig.from_settings)
    seed: int = Field(0, description="Run seed", ge=0, lt=2 ** 64)
    lam: float = Field(default_factory=lambda: get_settings().LOSS_LAMBDA, description="Monotonicity loss weight",
                       ge=0)

    @model_validator(mode="after")
    def validate_input_geometry(self) -> "RunConfig":
        """Sampler output must match the backbone input"""
        backbone = self.model.backbone
        if self.sampler.side != backbone.input_side:
            raise ValueError(f"sampler side {self.sampler.side} != backbone input_side {backbone.input_side}")
        if self.sampler.clip_len != backbone.clip_len:
            raise ValueError(f"sampler clip_len {self.sampler.clip_len} != backbone clip_len {backbone.clip_len}")
        return self

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 of the canonical sorted-key JSON"""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def updated(self, **changes: Any) -> "RunConfig":
        """
        Copy with dotted-path updates, re-validated

        :param changes: e.g. seed=1, **{"model.fusion": "concat"}
        """
        data = self.model_dump(mode="json")
        for path, value in changes.items():
            node = data
            keys = path.split(".")
            for key in keys[:-1]:
                node = node[key]
            node[keys[-1]] = value
        return RunConfig.model_validate(data)

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        """
        :raises ConfigError: file missing
        :raises ValidationError: content is not a valid RunConfig
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"配置文件不存在: {path}")
        return cls.model_validate_json(path.read_text(encoding="utf-8"))

    def to_file(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path

    @classmethod
    def from_checkpoint_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        return cls.model_validate(data)
