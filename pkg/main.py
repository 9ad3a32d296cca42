import os
import sys

# Ensure project root is in path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from service.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
