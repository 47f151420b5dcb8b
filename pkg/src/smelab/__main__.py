"""Allow `python -m smelab` as an alias for the `smelab` console script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
