"""Per-object score with one, two and three objects under the same budgets."""

import argparse

import numpy as np

from openended.config import RunConfig
from openended.evaluation import run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--actions", type=int, default=5000)
    p.add_argument("--goals", type=int, default=50)
    args = p.parse_args()

    for n in (1, 2, 3):
        ms = [run_experiment(RunConfig(seed=s, intrinsic_actions=args.actions, objects=n,
                                       goals=args.goals))["agent"].M
              for s in range(args.seeds)]
        print(f"n={n}: M {np.mean(ms):.4f}  per object {np.mean(ms) / n:.4f}", flush=True)


if __name__ == "__main__":
    main()
