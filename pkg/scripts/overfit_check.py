import argparse
import json
import os
import sys

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from service.schemas.run_config import RunConfig  # noqa: E402
from service.tasks.experiment_tasks import OVERFIT_MAX_EPOCHS, OVERFIT_TARGET_SRCC, ExperimentTasks  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description="Overfit the toy shared cross-attention model on 64 videos")
    parser.add_argument("--config", help="RunConfig JSON file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--target", type=float, default=OVERFIT_TARGET_SRCC)
    parser.add_argument("--max-epochs", type=int, default=OVERFIT_MAX_EPOCHS)
    args = parser.parse_args()

    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg = cfg.updated(seed=args.seed)
    print("Starting overfit check...")
    summary = ExperimentTasks().overfit(cfg, target=args.target, max_epochs=args.max_epochs)
    print(json.dumps(summary, indent=2))
    return 0 if summary["reached"] else 1


if __name__ == "__main__":
    sys.exit(main())
