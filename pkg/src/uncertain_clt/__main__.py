"""``python -m src.uncertain_clt``."""

import sys

from src.uncertain_clt.cli import main

sys.exit(main())
