"""Normalised spectral norm and harmonic sum over primes, with their fitted slopes.

Usage: python scripts/spectral_sweep.py [flags]   (same flags as `dlparity spectral`)
"""

import sys

from dlparity.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main(["spectral", *sys.argv[1:]]))
