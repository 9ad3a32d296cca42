from .fragment_sampler import (
    AestheticClip,
    FragmentClip,
    FragmentGeometry,
    SamplerConfig,
    fragment_geometry,
    normalize_clip,
    resize_aesthetic,
    sample_fragment,
    select_frames,
    stack_clips,
)

__all__ = [
    "AestheticClip",
    "FragmentClip",
    "FragmentGeometry",
    "SamplerConfig",
    "fragment_geometry",
    "normalize_clip",
    "resize_aesthetic",
    "sample_fragment",
    "select_frames",
    "stack_clips",
]
