"""
合成数据测试: 场景, 失真, 标签, 语料
"""
import dataclasses

import numpy as np
import pytest
from pydantic import ValidationError

from data.synthetic import (CONGRUENT_PAIRS, DISTORTION_KINDS, SCENE_CLASSES, CorpusConfig, DistortionSpec,
                            SceneSpec, build_corpus, distort, gen_scene, label, noise_sigma, plan_split, read_corpus,
                            write_corpus)
from data.synthetic.corpus import upscale
from data.synthetic.distortions import gradient_energy
from data.synthetic.scene_generator import mean_luma
from data.video import RawVideo
from utils.exceptions import ContractError


@pytest.mark.unit
class TestSceneGenerator:
    """程序化场景"""

    @pytest.mark.parametrize("scene_class", SCENE_CLASSES)
    def test_deterministic(self, scene_class):
        spec = SceneSpec(scene_class=scene_class, seed=11, frames=3, height=40, width=56)
        a, b = gen_scene(spec), gen_scene(spec)
        assert a.frames.shape == (3, 40, 56, 3)
        assert a.frames.dtype == np.uint8
        np.testing.assert_array_equal(a.frames, b.frames)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_dark_is_darker(self, seed):
        dark = gen_scene(SceneSpec(scene_class="dark_natural", seed=seed))
        bright = gen_scene(SceneSpec(scene_class="bright_texture", seed=seed))
        assert mean_luma(dark) < 0.35 * mean_luma(bright)

    def test_static_flat_has_no_motion(self):
        video = gen_scene(SceneSpec(scene_class="static_flat", seed=5, frames=4))
        assert not np.diff(video.frames.astype(np.int16), axis=0).any()

    def test_fast_motion_changes_between_frames(self):
        video = gen_scene(SceneSpec(scene_class="fast_motion_natural", seed=5, frames=2))
        assert np.abs(np.diff(video.frames.astype(np.int16), axis=0)).mean() > 1.0

    def test_unknown_class(self):
        with pytest.raises(ValidationError):
            SceneSpec(scene_class="snow")


@pytest.mark.unit
class TestDistortions:
    """失真"""

    @pytest.fixture
    def scene(self):
        return gen_scene(SceneSpec(scene_class="bright_texture", seed=3, frames=2, height=64, width=64))

    @pytest.mark.parametrize("kind", DISTORTION_KINDS)
    def test_zero_severity_is_identity(self, scene, kind):
        out = distort(scene, DistortionSpec(kind=kind, severity=0.0, seed=1))
        np.testing.assert_array_equal(out.frames, scene.frames)
        assert out.frames is not scene.frames

    def test_blur_reduces_gradient_energy(self, scene):
        energies = [gradient_energy(distort(scene, DistortionSpec(kind="gaussian_blur", severity=s)))
                    for s in (0.0, 0.25, 0.5, 1.0)]
        assert all(a >= b for a, b in zip(energies, energies[1:]))

    def test_noise_std(self):
        flat = RawVideo(frames=np.full((4, 64, 64, 3), 128, dtype=np.uint8))
        out = distort(flat, DistortionSpec(kind="additive_noise", severity=0.4, seed=9))
        residual = out.frames.astype(np.float64) - 128.0
        assert abs(residual.std() - noise_sigma(0.4)) < 0.1 * noise_sigma(0.4)

    def test_brightness_drop_darkens(self, scene):
        out = distort(scene, DistortionSpec(kind="brightness_drop", severity=1.0))
        assert mean_luma(out) < 0.35 * mean_luma(scene)

    def test_block_artifact_is_blocky(self, scene):
        out = distort(scene, DistortionSpec(kind="block_artifact", severity=1.0))
        block = out.frames[0, :8, :8].astype(np.int16)
        assert np.abs(block - block[0, 0]).max() <= 1

    def test_invalid_severity(self):
        with pytest.raises(ValidationError):
            DistortionSpec(kind="gaussian_blur", severity=1.5)


@pytest.mark.unit
class TestLabels:
    """上下文相关标签"""

    def test_closed_forms(self):
        assert label("dark_natural", DistortionSpec(kind="brightness_drop", severity=1.0)) == 70.0
        assert label("bright_texture", DistortionSpec(kind="brightness_drop", severity=1.0)) == 20.0
        assert label("fast_motion_natural", DistortionSpec(kind="gaussian_blur", severity=0.5)) == 75.0
        assert label("static_flat", DistortionSpec(kind="additive_noise", severity=0.0)) == 80.0

    def test_monotone_and_bounded(self):
        for scene_class in SCENE_CLASSES:
            for kind in DISTORTION_KINDS:
                values = [label(scene_class, DistortionSpec(kind=kind, severity=s)) for s in np.linspace(0, 1, 6)]
                assert all(0.0 <= v <= 100.0 for v in values)
                assert all(a >= b for a, b in zip(values, values[1:]))

    def test_congruent_pairs(self):
        assert CONGRUENT_PAIRS == {("dark_natural", "brightness_drop"), ("fast_motion_natural", "gaussian_blur")}


@pytest.mark.unit
class TestCorpus:
    """语料划分与读写"""

    def test_plan_is_deterministic(self, tiny_corpus_config):
        assert plan_split(tiny_corpus_config, "train") == plan_split(tiny_corpus_config, "train")
        other = tiny_corpus_config.model_copy(update={"seed": 8})
        assert plan_split(other, "train") != plan_split(tiny_corpus_config, "train")

    def test_context_split_is_half_congruent(self, tiny_test_corpus):
        flags = [item.congruent for item in tiny_test_corpus]
        assert all(flags[0::2])
        assert len(tiny_test_corpus) == 8

    def test_resolution_groups(self, tiny_corpus_config):
        cfg = tiny_corpus_config.model_copy(update={"low_res_fraction": 1.0})
        plans = plan_split(cfg, "train")
        assert all(plan.scene.height == 32 and plan.scene.width == 32 for plan in plans)
        corpus = build_corpus(cfg, "train", workers=1)
        assert all(item.resolution_group == "low" for item in corpus)
        # 低分辨率组上采样到统一帧尺寸
        assert all(item.video.frames.shape[1:3] == (48, 48) for item in corpus)

    def test_default_clip_shape(self, toy_sampler):
        cfg = CorpusConfig()
        assert (cfg.frames, cfg.height, cfg.width) == (4, 64, 64)
        assert CorpusConfig.from_settings().height == 64
        assert min(cfg.height, cfg.width) >= toy_sampler.side
        assert cfg.frames >= toy_sampler.clip_len

    def test_upscale(self):
        frames = np.random.default_rng(3).integers(0, 256, size=(2, 8, 8, 3), dtype=np.uint8)
        video = RawVideo(frames=frames, id="small")
        assert upscale(video, (8, 8)) is video
        out = upscale(video, (16, 24))
        assert out.frames.shape == (2, 16, 24, 3) and out.id == "small"
        flat = upscale(RawVideo(frames=np.full((1, 4, 4, 3), 77, dtype=np.uint8)), (12, 12))
        assert (flat.frames == 77).all()

    def test_manifest_columns(self, tiny_train_corpus):
        manifest = tiny_train_corpus.manifest()
        for column in ("id", "split", "class", "kind", "severity", "label", "resolution_group", "congruent"):
            assert column in manifest.columns
        np.testing.assert_array_equal(manifest["label"].to_numpy(), tiny_train_corpus.labels)

    def test_unknown_split(self, tiny_corpus_config):
        with pytest.raises(ContractError):
            plan_split(tiny_corpus_config, "validation")

    @pytest.mark.parametrize("fmt", ["rgb8", "frames"])
    def test_write_read(self, tiny_train_corpus, temp_dir, fmt):
        write_corpus(tiny_train_corpus, temp_dir, fmt=fmt)
        loaded = read_corpus(temp_dir)
        assert loaded.split == "train"
        assert loaded.ids == tiny_train_corpus.ids
        np.testing.assert_array_equal(loaded.labels, tiny_train_corpus.labels)
        np.testing.assert_array_equal(loaded[3].video.frames, tiny_train_corpus[3].video.frames)

    def test_read_missing_manifest(self, temp_dir):
        with pytest.raises(ContractError):
            read_corpus(temp_dir)


@pytest.mark.unit
class TestRawVideo:
    """原始视频容器"""

    def test_is_dataclass(self):
        video = RawVideo(frames=np.zeros((3, 5, 7, 3), dtype=np.uint8), fps=12.0, id="v")
        assert dataclasses.is_dataclass(video)
        assert (video.num_frames, video.height, video.width) == (3, 5, 7)
        assert video.frames.flags["C_CONTIGUOUS"]

    @pytest.mark.parametrize("frames", [
        np.zeros((3, 5, 7), dtype=np.uint8),
        np.zeros((3, 5, 7, 4), dtype=np.uint8),
        np.zeros((0, 5, 7, 3), dtype=np.uint8),
        np.zeros((3, 5, 7, 3), dtype=np.float32),
    ])
    def test_invalid_frames(self, frames):
        with pytest.raises(ContractError):
            RawVideo(frames=frames)
