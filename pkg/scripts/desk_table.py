#!/usr/bin/env python3
"""Train the four desk-scale configurations on the shared synthetic corpus
and print the comparison table (PPL / CVR / Gold MSE).

Usage: python scripts/desk_table.py [--steps 2500] [--hidden 32]
"""

import argparse

from genie.evaluate import report
from genie.experiments import run_desk_comparison


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2500)
    parser.add_argument("--hidden", type=int, default=32)
    parser.add_argument("--seed", type=int, default=100)
    args = parser.parse_args()

    runs = run_desk_comparison(max_steps=args.steps, hidden_size=args.hidden,
                               seed=args.seed)
    text, _ = report([run.report for run in runs.values()])
    print(text)
    total = sum(run.seconds for run in runs.values())
    print(f"\ntotal training time: {total:.0f}s")


if __name__ == "__main__":
    main()
