#!/usr/bin/env python3
"""oscint runner - standalone entry point.

Usage:
    python oscint.py pvint --monomial 3
    python oscint.py sweep --n-min 2 --n-max 8 --out results/
    python oscint.py selftest --quick
"""

import os
import sys

# Ensure project root is on sys.path
_PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from src.cli import main

if __name__ == "__main__":
    main()
