#!/usr/bin/env python3
"""Memorization sanity check: full-size model on two fixed melodies.

Usage: python scripts/overfit_check.py [--max-steps 5000]
"""

import argparse
import time

from genie.experiments import overfit_two_melodies


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-steps", type=int, default=5000)
    parser.add_argument("--lr", type=float, default=1e-3)
    args = parser.parse_args()

    t0 = time.time()
    result, ppl = overfit_two_melodies(max_steps=args.max_steps, lr=args.lr)
    print(f"training PPL {ppl:.4f} after {result.steps_run} steps "
          f"({time.time() - t0:.0f}s)")


if __name__ == "__main__":
    main()
