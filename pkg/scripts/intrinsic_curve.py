"""Mean score as a function of the intrinsic-phase length."""

import argparse

import numpy as np

from openended.config import RunConfig
from openended.evaluation import run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grid", type=int, nargs="+", default=[200, 1000, 5000])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--goals", type=int, default=50)
    args = p.parse_args()

    print("N,mean_M,std_M")
    for N in args.grid:
        ms = [run_experiment(RunConfig(seed=s, intrinsic_actions=N, goals=args.goals))["agent"].M
              for s in range(args.seeds)]
        print(f"{N},{np.mean(ms):.4f},{np.std(ms, ddof=1) if len(ms) > 1 else 0.0:.4f}",
              flush=True)


if __name__ == "__main__":
    main()
