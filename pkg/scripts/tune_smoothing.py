"""Sweep the encoder's smoothing width on held-out seeds (not the acceptance seeds)."""

import argparse

import numpy as np

from openended.config import RunConfig
from openended.evaluation import run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sigmas", type=float, nargs="+", default=[8, 12, 16, 24])
    p.add_argument("--seeds", type=int, nargs="+", default=[100, 101, 102])
    p.add_argument("--actions", type=int, default=5000)
    args = p.parse_args()

    for sigma in args.sigmas:
        ms = [run_experiment(RunConfig(seed=s, intrinsic_actions=args.actions,
                                       smoothing_sigma=sigma))["agent"].M for s in args.seeds]
        print(f"sigma {sigma:g}: per seed {np.round(ms, 3)}  mean {np.mean(ms):.4f}", flush=True)


if __name__ == "__main__":
    main()
