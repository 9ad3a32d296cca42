from .backbone import (Backbone, BackboneConfig, FeatureMap, build_siamese, build_single, load_pretrained_backbone,
                       window_attention)
from .fusion import (FUSION_MODES, FusionOutput, FusionParams, QualityMap, branch_only_score, dual_cross_attention,
                     fuse, fuse_maps, predict_score)
from .param_store import ParamStore
from .vqa_model import INFERENCE_MODES, TOPOLOGIES, ModelConfig, VideoInputs, VQAModel, prepare_inputs, stack_inputs

__all__ = [
    "Backbone", "BackboneConfig", "FeatureMap", "build_siamese", "build_single", "load_pretrained_backbone",
    "window_attention", "FUSION_MODES", "FusionOutput", "FusionParams", "QualityMap", "branch_only_score",
    "dual_cross_attention", "fuse", "fuse_maps", "predict_score", "ParamStore", "INFERENCE_MODES", "TOPOLOGIES",
    "ModelConfig", "VideoInputs", "VQAModel", "prepare_inputs", "stack_inputs",
]
