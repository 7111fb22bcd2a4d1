import sys

from slice_planner.cli.__main__ import main

if __name__ == "__main__":
    sys.exit(main())
