"""Allow ``python -m uig``."""

import sys

from .cli import main

sys.exit(main())
