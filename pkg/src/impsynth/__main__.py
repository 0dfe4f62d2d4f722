"""Allow `python -m impsynth ...` to behave like the installed script."""

import sys

from .cli import main

sys.exit(main())
