"""Exact mean squared covariance of discrete logs and its power-log fit.

Usage: python scripts/covariance_sweep.py [flags]   (same flags as `dlparity cov`)
"""

import sys

from dlparity.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main(["cov", *sys.argv[1:]]))
