#!/usr/bin/env python3
"""Run the diagnostic suite from a source checkout.

Thin wrapper over the banachlab CLI: forwards its arguments unchanged and
defaults to the full run when none are given.  See `banachlab --help`.
"""

import sys

from banachlab.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] or ["all"]))
