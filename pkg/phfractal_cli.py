"""
PHFRACTAL launcher
==================
Runs the command line from a checkout: `python phfractal_cli.py exact menger`.
"""

import sys

from phfractal.cli import main

if __name__ == "__main__":
    sys.exit(main())
