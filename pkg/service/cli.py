"""
命令行入口

子命令: gen-data, sample-fragments, train, eval, ablate, quality-map
退出码: 0 成功; 2 配置 / 前置条件错误; 1 其他错误
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from calculation.model.fusion import FUSION_MODES
from calculation.model.vqa_model import INFERENCE_MODES
from config import get_settings
from data.storage.checkpoint_store import load_checkpoint
from data.storage.video_store import load_video
from data.synthetic.corpus import SPLITS
from service.schemas.run_config import RunConfig
from service.tasks import AblationTasks, DataTasks, EvalTasks, ExportTasks, TrainTasks
from service.tasks.common import config_from_checkpoint, load_corpus, model_from_checkpoint
from utils.custom_logger import get_logger
from utils.exceptions import ConfigError, ContractError, TwinVQAError

logger = get_logger("cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# 命令行取值 -> 内部名称; 内部名称本身也可直接使用
FUSION_ALIASES = {"score": "score", "concat": "concat", "self": "self_attention", "cross": "cross_attention",
                  **{mode: mode for mode in FUSION_MODES}}
MODE_ALIASES = {"full": "full", "technical": "technical_only", "aesthetic": "aesthetic_only",
                **{mode: mode for mode in INFERENCE_MODES}}
_TRUE = ("true", "1", "yes", "on")
_FALSE = ("false", "0", "no", "off")


def _alias(table: Dict[str, str], kind: str):
    def parse(value: str) -> str:
        key = value.strip().lower()
        if key not in table:
            raise argparse.ArgumentTypeError(f"未知的{kind}: {value}, 可选: {', '.join(table)}")
        return table[key]
    parse.__name__ = kind
    return parse


fusion_mode = _alias(FUSION_ALIASES, "fusion")
inference_mode = _alias(MODE_ALIASES, "mode")


def parse_bool(value: str) -> bool:
    key = value.strip().lower()
    if key in _TRUE:
        return True
    if key in _FALSE:
        return False
    raise argparse.ArgumentTypeError(f"无法解析为布尔值: {value}")


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """读取 --config 并应用命令行覆盖项"""
    cfg = RunConfig.from_file(Path(args.config)) if getattr(args, "config", None) else RunConfig()
    changes: Dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
        changes["data.corpus.seed"] = args.seed
    if getattr(args, "fusion", None):
        changes["model.fusion"] = args.fusion
    if getattr(args, "shared", None) is not None:
        changes["model.shared"] = args.shared
    if getattr(args, "epochs", None) is not None:
        changes["optimizer.epochs"] = args.epochs
    if getattr(args, "pretrain", None) is not None:
        changes["pretrain.enabled"] = args.pretrain
    return cfg.updated(**changes) if changes else cfg


def input_config(args: argparse.Namespace, cfg: RunConfig) -> RunConfig:
    """
    带检查点的子命令: 模型结构来自检查点, --config 提供数据, 采样与种子, --seed 再覆盖种子

    :param cfg: 检查点中的运行配置
    :raises ConfigError: 采样网格与检查点不一致 (只有 seed 可以不同)
    """
    if getattr(args, "config", None):
        override = RunConfig.from_file(Path(args.config))
        mine, theirs = override.sampler.model_dump(exclude={"seed"}), cfg.sampler.model_dump(exclude={"seed"})
        if mine != theirs:
            raise ConfigError(f"采样配置 {mine} 与检查点 {theirs} 不一致")
        cfg = cfg.model_copy(update={"data": override.data, "sampler": override.sampler, "seed": override.seed})
    if getattr(args, "seed", None) is not None:
        cfg = cfg.updated(seed=args.seed, **{"data.corpus.seed": args.seed})
    return cfg


def output_dir(args: argparse.Namespace, command: str, cfg: Optional[RunConfig] = None) -> Path:
    if args.out:
        return Path(args.out)
    suffix = cfg.config_hash()[:8] if cfg is not None else "latest"
    return Path(get_settings().OUTPUT_DIR) / command / suffix


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, default=str))


# ---------------------------------------------------------------- 子命令

def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    result = DataTasks().generate(cfg.data.corpus, output_dir(args, "gen-data", cfg), splits=args.splits,
                                  fmt=args.format)
    _emit(result)
    return EXIT_OK


def cmd_sample_fragments(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    video = load_video(Path(args.video))
    sampler = cfg.sampler if args.seed is None else cfg.sampler.with_seed(args.seed)
    sidecar = ExportTasks().export_fragments(video, sampler, output_dir(args, "sample-fragments", cfg))
    _emit({"video_id": sidecar["video_id"], "frame_indices": sidecar["frame_indices"]})
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    if cfg.optimizer.batch_size < 2:
        raise ConfigError(f"batch_size 至少为 2, 当前值: {cfg.optimizer.batch_size}")
    tasks = TrainTasks()
    corpus = load_corpus(cfg, "train")
    result = tasks.finetune(Path(args.init), cfg, corpus) if args.init else tasks.train(cfg, corpus)
    outputs = tasks.save(result, cfg, output_dir(args, "train", cfg), plot=args.plot)
    _emit({**outputs, "train_srcc": result.checkpoint.extra.get("train_srcc"),
           "train_plcc": result.checkpoint.extra.get("train_plcc")})
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(Path(args.checkpoint))
    model, cfg = model_from_checkpoint(checkpoint)
    cfg = input_config(args, cfg)
    corpus = load_corpus(cfg, args.split)
    tasks = EvalTasks()
    result = tasks.evaluate_model(model, cfg, corpus, mode=args.mode)
    outputs = tasks.save(result, output_dir(args, "eval", cfg))
    _emit({**outputs, "srcc": result.report.srcc, "plcc": result.report.plcc, "status": result.report.status})
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    tasks = AblationTasks()
    table = tasks.ablate(cfg, load_corpus(cfg, "train"), load_corpus(cfg, "context_test"),
                         fusions=args.fusions or FUSION_MODES,
                         pretraining=(False,) if args.no_pretrain else (False, True))
    outputs = tasks.save(table, output_dir(args, "ablate", cfg))
    _emit({**outputs, "rows": len(table)})
    return EXIT_OK


def cmd_quality_map(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(Path(args.checkpoint))
    cfg = input_config(args, config_from_checkpoint(checkpoint))
    video = load_video(Path(args.video))
    sidecar = ExportTasks().export_quality_map(checkpoint, video, output_dir(args, "quality-map", cfg),
                                               plot=args.plot, run_config=cfg)
    _emit({"video_id": sidecar.video_id, "score": sidecar.score, "slices": len(sidecar.slices)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinvqa", description="Two-branch video quality assessment")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="RunConfig JSON file")
        p.add_argument("--seed", type=int, help="Override the run seed (u64)")
        p.add_argument("--out", help="Output directory (default OUTPUT_DIR/<command>/<hash>)")

    p = sub.add_parser("gen-data", help="Generate the synthetic corpus")
    common(p)
    p.add_argument("--splits", nargs="+", default=list(SPLITS), choices=SPLITS)
    p.add_argument("--format", default="rgb8", choices=("rgb8", "frames"))
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("sample-fragments", help="Dump fragments and aesthetic frames of one video")
    common(p)
    p.add_argument("video", help="Frame directory or .rgb8 file")
    p.set_defaults(handler=cmd_sample_fragments)

    p = sub.add_parser("train", help="Train a quality model")
    common(p)
    p.add_argument("--fusion", type=fusion_mode, help="score | concat | self | cross")
    p.add_argument("--shared", type=parse_bool, nargs="?", const=True, default=None, metavar="BOOL",
                   help="Share the backbone between branches (true / false)")
    p.add_argument("--pretrain", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--epochs", type=int)
    p.add_argument("--init", help="Checkpoint directory to start from")
    p.add_argument("--plot", action="store_true", help="Write training_curve.png")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="Evaluate a checkpoint")
    common(p)
    p.add_argument("checkpoint", help="Checkpoint directory")
    p.add_argument("--mode", type=inference_mode, default="full", help="full | technical | aesthetic")
    p.add_argument("--split", default="context_test", choices=SPLITS)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("ablate", help="Run the ablation table")
    common(p)
    p.add_argument("--fusions", nargs="+", type=fusion_mode, help="score | concat | self | cross")
    p.add_argument("--epochs", type=int)
    p.add_argument("--no-pretrain", action="store_true", help="Skip the pretrained half of the table")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("quality-map", help="Export quality maps of one video")
    common(p)
    p.add_argument("checkpoint", help="Checkpoint directory")
    p.add_argument("video", help="Frame directory or .rgb8 file")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(handler=cmd_quality_map)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ContractError, ValidationError) as e:
        logger.error(f"{args.command}: {str(e)}")
        return EXIT_USAGE
    except TwinVQAError as e:
        logger.error(f"{args.command}: {str(e)}", exc_info=True)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"{args.command} 运行失败: {str(e)}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
