"""
存储测试: 视频文件, 检查点, 运行配置
"""
import json

import numpy as np
import pytest
from pydantic import ValidationError

from data.storage import (Checkpoint, CheckpointStore, VideoStore, load_checkpoint, load_video, read_ppm,
                          save_checkpoint, write_ppm)
from data.storage.checkpoint_store import MANIFEST_FILE, WEIGHTS_FILE
from service.schemas.run_config import RunConfig
from utils.exceptions import CheckpointError, ConfigError, ContractError


@pytest.fixture
def checkpoint(tiny_run_config):
    rng = np.random.default_rng(0)
    tensors = {
        "b.weight": rng.normal(size=(3, 4)).astype(np.float32),
        "a.bias": rng.normal(size=(5,)).astype(np.float32),
        "c.scalar": np.array([1.5], dtype=np.float32),
    }
    return Checkpoint(tensors=tensors, run_config=tiny_run_config.model_dump(mode="json"), extra={"epochs": 2})


@pytest.mark.unit
class TestVideoStore:
    """原始视频读写"""

    @pytest.mark.parametrize("fmt", ["rgb8", "frames"])
    def test_roundtrip(self, temp_dir, random_video, fmt):
        with VideoStore({"root": temp_dir, "format": fmt}) as store:
            store.save("clip", random_video)
            loaded = store.load("clip")
            assert store.list_keys() == ["clip"]
        np.testing.assert_array_equal(loaded.frames, random_video.frames)
        assert loaded.fps == random_video.fps
        assert loaded.id == "random"

    def test_rgb8_layout(self, temp_dir, coordinate_video):
        VideoStore({"root": temp_dir}).save("coords", coordinate_video)
        raw = (temp_dir / "coords.rgb8").read_bytes()
        assert len(raw) == 6 * 70 * 90 * 3
        # 行优先 RGB: 第 1 帧第 0 行第 2 列
        offset = ((1 * 70 + 0) * 90 + 2) * 3
        assert tuple(raw[offset:offset + 3]) == (1, 0, 2)

    def test_truncated_blob(self, temp_dir, random_video):
        VideoStore({"root": temp_dir}).save("clip", random_video)
        blob = temp_dir / "clip.rgb8"
        blob.write_bytes(blob.read_bytes()[:-3])
        with pytest.raises(ContractError):
            load_video(blob)

    def test_missing_video(self, temp_dir):
        with pytest.raises(ContractError):
            load_video(temp_dir / "nothing")

    def test_unknown_format(self, temp_dir):
        with pytest.raises(ContractError):
            VideoStore({"root": temp_dir, "format": "mp4"})

    def test_ppm_roundtrip(self, temp_dir, random_video):
        path = write_ppm(temp_dir / "frame.ppm", random_video.frames[0])
        assert path.read_bytes().startswith(b"P6")
        np.testing.assert_array_equal(read_ppm(path), random_video.frames[0])


@pytest.mark.unit
class TestCheckpointStore:
    """检查点格式"""

    def test_roundtrip(self, temp_dir, checkpoint):
        save_checkpoint(temp_dir / "ckpt", checkpoint)
        loaded = load_checkpoint(temp_dir / "ckpt")
        assert loaded.names() == ["a.bias", "b.weight", "c.scalar"]
        for name, array in checkpoint.tensors.items():
            np.testing.assert_array_equal(loaded.tensors[name], array)
            assert loaded.tensors[name].dtype == np.float32
        assert loaded.run_config == checkpoint.run_config
        assert loaded.extra == {"epochs": 2}

    def test_resave_is_byte_identical(self, temp_dir, checkpoint):
        save_checkpoint(temp_dir / "first", checkpoint)
        save_checkpoint(temp_dir / "second", load_checkpoint(temp_dir / "first"))
        for name in (MANIFEST_FILE, WEIGHTS_FILE):
            assert (temp_dir / "first" / name).read_bytes() == (temp_dir / "second" / name).read_bytes()

    def test_manifest_layout(self, temp_dir, checkpoint):
        save_checkpoint(temp_dir, checkpoint)
        manifest = json.loads((temp_dir / MANIFEST_FILE).read_text(encoding="utf-8"))
        offsets = [entry["offset"] for entry in manifest["tensors"]]
        assert offsets == [0, 20, 68]
        assert manifest["total_bytes"] == 72
        assert (temp_dir / WEIGHTS_FILE).stat().st_size == 72

    def test_corrupt_weights(self, temp_dir, checkpoint):
        save_checkpoint(temp_dir, checkpoint)
        weights = temp_dir / WEIGHTS_FILE
        weights.write_bytes(weights.read_bytes()[:-4])
        with pytest.raises(CheckpointError):
            load_checkpoint(temp_dir)

    def test_wrong_format(self, temp_dir, checkpoint):
        save_checkpoint(temp_dir, checkpoint)
        manifest = json.loads((temp_dir / MANIFEST_FILE).read_text(encoding="utf-8"))
        manifest["version"] = 99
        (temp_dir / MANIFEST_FILE).write_text(json.dumps(manifest), encoding="utf-8")
        with pytest.raises(CheckpointError):
            load_checkpoint(temp_dir)

    def test_missing(self, temp_dir):
        with pytest.raises(CheckpointError):
            load_checkpoint(temp_dir / "absent")

    def test_store_keys(self, temp_dir, checkpoint):
        with CheckpointStore({"root": temp_dir}) as store:
            store.save("run-b", checkpoint)
            store.save("run-a", checkpoint)
            assert store.list_keys() == ["run-a", "run-b"]
            assert store.load("run-a").names() == checkpoint.names()


@pytest.mark.unit
class TestRunConfig:
    """运行配置"""

    def test_json_roundtrip(self, temp_dir, tiny_run_config):
        path = tiny_run_config.to_file(temp_dir / "run_config.json")
        loaded = RunConfig.from_file(path)
        assert loaded == tiny_run_config
        assert loaded.config_hash() == tiny_run_config.config_hash()

    def test_hash_changes_with_content(self, tiny_run_config):
        changed = tiny_run_config.updated(**{"model.fusion": "concat"})
        assert changed.model.fusion == "concat"
        assert changed.config_hash() != tiny_run_config.config_hash()
        assert len(tiny_run_config.config_hash()) == 64

    def test_updated_is_validated(self, tiny_run_config):
        with pytest.raises(ValidationError):
            tiny_run_config.updated(**{"model.fusion": "gating"})
        with pytest.raises(ValidationError):
            tiny_run_config.updated(**{"sampler.patch": 16})

    def test_missing_file(self, temp_dir):
        with pytest.raises(ConfigError):
            RunConfig.from_file(temp_dir / "absent.json")

    def test_checkpoint_embedding(self, tiny_run_config):
        data = json.loads(json.dumps(tiny_run_config.model_dump(mode="json")))
        assert RunConfig.from_checkpoint_dict(data) == tiny_run_config
