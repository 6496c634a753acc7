"""Parity-bit training curves for several bitlengths.

Usage: python scripts/parity_training_sweep.py [flags]   (same flags as `dlparity train`)
"""

import sys

from dlparity.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main(["train", *sys.argv[1:]]))
