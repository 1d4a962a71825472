#!/usr/bin/env python3
"""Measure the Toeplitz-identity residual over an h-sweep, with the flat
weight and with the escape-function deformation, and report the log-log
slopes (the identity predicts O(h), slope >= 0.9 expected)."""

import sys
from pathlib import Path

import numpy as np

from gevspec import cli

CONFIG = (Path(__file__).resolve().parent.parent
          / "configs" / "gevrey2_toeplitz.cfg")


def main() -> int:
    return cli.main(["toeplitz", "--config", str(CONFIG)])


if __name__ == "__main__":
    sys.exit(main())
