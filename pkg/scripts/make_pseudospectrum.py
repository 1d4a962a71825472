#!/usr/bin/env python3
"""Render a pseudospectrum heatmap (log10 sigma_min with eigenvalues
overlaid) for a catalog model.

Usage: make_pseudospectrum.py [model] [h]
Defaults: gevrey-transport:s=2 at h = 0.05.
"""

import sys

from gevspec import cli


def main() -> int:
    model = sys.argv[1] if len(sys.argv) > 1 else "gevrey-transport:s=2"
    h = sys.argv[2] if len(sys.argv) > 2 else "0.05"
    return cli.main([
        "pseudospectrum", "--model", model, "--h", h,
        "--center", "0.5,0", "--span", "1.2", "--res", "81", "--L", "6",
    ])


if __name__ == "__main__":
    sys.exit(main())
