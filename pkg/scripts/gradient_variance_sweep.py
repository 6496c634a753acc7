"""Gradient variance relative to gradient norm across primes and random initialisations.

Usage: python scripts/gradient_variance_sweep.py [flags]   (same flags as `dlparity thm1`)
"""

import sys

from dlparity.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main(["thm1", *sys.argv[1:]]))
