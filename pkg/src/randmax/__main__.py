from __future__ import annotations

import sys

from randmax.cli import main

sys.exit(main())
