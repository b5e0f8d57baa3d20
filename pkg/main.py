#!/usr/bin/env python
import sys
from pathlib import Path

# Get the root directory of the project
ROOT_DIR = Path(__file__).parent


def main():
    """Main entry point: the icdkit command line."""
    sys.path.insert(0, str(ROOT_DIR))
    from icdkit.cli import run
    sys.exit(run())


if __name__ == "__main__":
    main()
