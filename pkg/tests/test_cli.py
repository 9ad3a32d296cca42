"""
命令行测试
"""
import json

import pytest

from service import cli
from service.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, input_config, load_run_config, main
from utils.exceptions import CheckpointError, ConfigError, InputTooSmallError


@pytest.fixture
def config_file(tiny_run_config, temp_dir):
    return tiny_run_config.to_file(temp_dir / "run_config.json")


@pytest.mark.unit
class TestParser:
    """参数解析与配置覆盖"""

    def test_overrides(self, config_file, tiny_run_config):
        args = build_parser().parse_args(["train", "--config", str(config_file), "--seed", "11",
                                          "--fusion", "concat", "--shared", "false", "--epochs", "5", "--pretrain"])
        cfg = load_run_config(args)
        assert cfg.seed == 11 and cfg.data.corpus.seed == 11
        assert cfg.model.fusion == "concat"
        assert cfg.model.shared is False
        assert cfg.optimizer.epochs == 5
        assert cfg.pretrain.enabled is True
        assert cfg.model.backbone == tiny_run_config.model.backbone

    def test_no_overrides(self, config_file, tiny_run_config):
        args = build_parser().parse_args(["train", "--config", str(config_file)])
        assert load_run_config(args) == tiny_run_config

    def test_unknown_fusion(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--fusion", "gating"])

    def test_output_dir(self, config_file, tiny_run_config, mocker, temp_dir):
        mocker.patch.object(cli, "get_settings", return_value=mocker.Mock(OUTPUT_DIR=str(temp_dir)))
        args = build_parser().parse_args(["train", "--config", str(config_file)])
        path = cli.output_dir(args, "train", tiny_run_config)
        assert path == temp_dir / "train" / tiny_run_config.config_hash()[:8]


@pytest.mark.unit
class TestFlagValues:
    """命令行取值与内部名称的对应"""

    @pytest.mark.parametrize("token, fusion", [
        ("score", "score"),
        ("concat", "concat"),
        ("self", "self_attention"),
        ("cross", "cross_attention"),
        ("cross_attention", "cross_attention"),
    ])
    def test_fusion_tokens(self, config_file, token, fusion):
        args = build_parser().parse_args(["train", "--config", str(config_file), "--fusion", token])
        assert args.fusion == fusion
        assert load_run_config(args).model.fusion == fusion

    @pytest.mark.parametrize("argv, shared", [
        (["--shared", "true"], True),
        (["--shared", "false"], False),
        (["--shared", "True"], True),
        (["--shared", "0"], False),
        (["--shared"], True),
        ([], None),
    ])
    def test_shared_value(self, argv, shared):
        assert build_parser().parse_args(["train", *argv]).shared is shared

    def test_shared_rejects_non_bool(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--shared", "maybe"])

    @pytest.mark.parametrize("token, mode", [
        ("full", "full"),
        ("technical", "technical_only"),
        ("aesthetic", "aesthetic_only"),
        ("technical_only", "technical_only"),
    ])
    def test_mode_tokens(self, token, mode):
        assert build_parser().parse_args(["eval", "ckpt", "--mode", token]).mode == mode

    def test_unknown_mode(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["eval", "ckpt", "--mode", "joint"])

    def test_ablate_fusion_tokens(self):
        args = build_parser().parse_args(["ablate", "--fusions", "score", "self", "cross"])
        assert args.fusions == ["score", "self_attention", "cross_attention"]

    @pytest.mark.parametrize("argv", [
        ["gen-data"],
        ["sample-fragments", "v.rgb8"],
        ["train"],
        ["eval", "ckpt"],
        ["ablate"],
        ["quality-map", "ckpt", "v.rgb8"],
    ])
    def test_common_flags_on_every_command(self, argv):
        args = build_parser().parse_args([*argv, "--config", "run.json", "--seed", "18446744073709551615",
                                          "--out", "runs/x"])
        assert args.config == "run.json"
        assert args.seed == 2 ** 64 - 1
        assert args.out == "runs/x"


@pytest.mark.unit
class TestInputConfig:
    """带检查点的子命令: 模型来自检查点, 输入侧可覆盖"""

    def test_no_overrides(self, tiny_run_config):
        args = build_parser().parse_args(["eval", "ckpt"])
        assert input_config(args, tiny_run_config) == tiny_run_config

    def test_seed_override(self, tiny_run_config):
        args = build_parser().parse_args(["quality-map", "ckpt", "v.rgb8", "--seed", "5"])
        cfg = input_config(args, tiny_run_config)
        assert cfg.seed == 5 and cfg.data.corpus.seed == 5
        assert cfg.model == tiny_run_config.model

    def test_config_supplies_inputs(self, tiny_run_config, temp_dir):
        other = tiny_run_config.updated(seed=9, **{"sampler.seed": 4, "optimizer.epochs": 7})
        path = other.to_file(temp_dir / "other.json")
        cfg = input_config(build_parser().parse_args(["eval", "ckpt", "--config", str(path)]), tiny_run_config)
        assert cfg.seed == 9 and cfg.sampler.seed == 4
        assert cfg.optimizer == tiny_run_config.optimizer

    def test_config_with_other_grid(self, tiny_run_config, temp_dir):
        path = tiny_run_config.updated(**{"sampler.cubes_t": 1, "sampler.frames_per_cube": 4}) \
            .to_file(temp_dir / "grid.json")
        args = build_parser().parse_args(["quality-map", "ckpt", "v.rgb8", "--config", str(path)])
        with pytest.raises(ConfigError):
            input_config(args, tiny_run_config)


@pytest.mark.unit
class TestExitCodes:
    """错误到退出码的映射"""

    @pytest.mark.parametrize("error, code", [
        (ConfigError("bad"), EXIT_USAGE),
        (InputTooSmallError("small"), EXIT_USAGE),
        (CheckpointError("broken"), EXIT_FAILURE),
        (RuntimeError("boom"), EXIT_FAILURE),
    ])
    def test_errors(self, mocker, config_file, error, code):
        mocker.patch.object(cli, "load_corpus", side_effect=error)
        assert main(["train", "--config", str(config_file)]) == code

    def test_missing_config(self, temp_dir):
        assert main(["train", "--config", str(temp_dir / "absent.json")]) == EXIT_USAGE

    def test_invalid_override(self, config_file):
        # batch_size 1 在训练前被拒绝
        data = json.loads(config_file.read_text(encoding="utf-8"))
        data["optimizer"]["batch_size"] = 1
        config_file.write_text(json.dumps(data), encoding="utf-8")
        assert main(["train", "--config", str(config_file)]) == EXIT_USAGE

    def test_missing_checkpoint(self, temp_dir):
        assert main(["eval", str(temp_dir / "absent")]) == EXIT_FAILURE


@pytest.mark.integration
class TestCommands:
    """端到端子命令"""

    def test_gen_data(self, config_file, temp_dir, capsys):
        assert main(["gen-data", "--config", str(config_file), "--out", str(temp_dir / "data"),
                     "--splits", "train"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["train"]["count"] == 8
        assert (temp_dir / "data" / "train" / "manifest.csv").exists()

    def test_sample_fragments(self, config_file, random_video, temp_dir, capsys):
        from data.storage import VideoStore
        VideoStore({"root": temp_dir}).save("random", random_video)
        assert main(["sample-fragments", str(temp_dir / "random.rgb8"), "--config", str(config_file),
                     "--out", str(temp_dir / "fragments")]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["frame_indices"]) == 4
        assert (temp_dir / "fragments" / "sample_map.json").exists()

    def test_train_eval_quality_map(self, config_file, random_video, temp_dir, capsys):
        from data.storage import VideoStore
        run_dir = temp_dir / "run"
        assert main(["train", "--config", str(config_file), "--epochs", "1", "--fusion", "cross", "--shared", "true",
                     "--out", str(run_dir)]) == EXIT_OK
        trained = json.loads(capsys.readouterr().out)
        assert trained["checkpoint"] == str(run_dir / "checkpoint")

        assert main(["eval", str(run_dir / "checkpoint"), "--split", "train", "--out", str(temp_dir / "eval")]) \
            == EXIT_OK
        evaluated = json.loads(capsys.readouterr().out)
        if trained["train_srcc"] is not None:
            assert evaluated["srcc"] == pytest.approx(trained["train_srcc"], abs=1e-6)

        assert main(["eval", str(run_dir / "checkpoint"), "--mode", "technical", "--config", str(config_file),
                     "--seed", "5", "--out", str(temp_dir / "eval_technical")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["status"] in ("ok", "not_a_result")

        VideoStore({"root": temp_dir}).save("random", random_video)
        assert main(["quality-map", str(run_dir / "checkpoint"), str(temp_dir / "random.rgb8"),
                     "--out", str(temp_dir / "maps")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["slices"] == 6

        assert main(["quality-map", str(run_dir / "checkpoint"), str(temp_dir / "random.rgb8"),
                     "--config", str(config_file), "--seed", "5", "--out", str(temp_dir / "maps_seed")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["slices"] == 6
