"""Exact checks of the sign-matrix and orthogonality identities over a prime range.

Usage: python scripts/verify_identities.py [flags]   (same flags as `dlparity verify`)
"""

import sys

from dlparity.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", *sys.argv[1:]]))
