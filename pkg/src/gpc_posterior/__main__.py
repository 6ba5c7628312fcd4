"""Entry point for ``python -m gpc_posterior``."""

import sys

from .bench_cli import main

sys.exit(main())
