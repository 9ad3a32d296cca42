from .corpus import Corpus, CorpusConfig, build_corpus, plan_split, read_corpus, write_corpus
from .distortions import DISTORTION_KINDS, DistortionSpec, distort, noise_sigma
from .labeling import CONGRUENT_PAIRS, LabeledVideo, is_congruent, label
from .scene_generator import SCENE_CLASSES, SceneSpec, gen_scene

__all__ = [
    "Corpus", "CorpusConfig", "build_corpus", "plan_split", "read_corpus", "write_corpus",
    "DISTORTION_KINDS", "DistortionSpec", "distort", "noise_sigma",
    "CONGRUENT_PAIRS", "LabeledVideo", "is_congruent", "label",
    "SCENE_CLASSES", "SceneSpec", "gen_scene",
]
