import argparse
import json
import os
import sys
from pathlib import Path

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from data.synthetic import build_corpus  # noqa: E402
from service.schemas.run_config import RunConfig  # noqa: E402
from service.tasks.experiment_tasks import CONTEXT_SEEDS, ExperimentTasks  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description="Shared vs unshared backbones on the context-dependent test split")
    parser.add_argument("--config", help="RunConfig JSON file")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(CONTEXT_SEEDS))
    parser.add_argument("--out", default="runs/context_experiment")
    args = parser.parse_args()

    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    train_corpus = build_corpus(cfg.data.corpus, "train")
    test_corpus = build_corpus(cfg.data.corpus, "context_test")

    print("Starting context experiment...")
    tasks = ExperimentTasks()
    table = tasks.context(cfg, train_corpus, test_corpus, seeds=args.seeds)
    summary = tasks.context_summary(table)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "context_experiment.csv", index=False)
    (out / "context_summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    print(json.dumps(summary, indent=2))
    print("Context experiment completed.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
