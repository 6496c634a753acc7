"""Training on every bit of the discrete log at once.

Usage: python scripts/all_bits_sweep.py [flags]   (same flags as `dlparity all-bits`)
"""

import sys

from dlparity.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main(["all-bits", *sys.argv[1:]]))
