"""Trained agent against random and stay-still policies, one object, several seeds."""

import argparse

import numpy as np

from openended.config import RunConfig
from openended.evaluation import run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--actions", type=int, default=5000)
    p.add_argument("--goals", type=int, default=50)
    p.add_argument("--mode", default="round1")
    args = p.parse_args()

    scores = {k: [] for k in ("agent", "random", "still")}
    for seed in range(args.seeds):
        cfg = RunConfig(seed=seed, intrinsic_actions=args.actions, goals=args.goals,
                        mode=args.mode)
        reports = run_experiment(cfg, tuple(scores))
        for k, r in reports.items():
            scores[k].append(r.M)
        print(f"seed {seed}: " + "  ".join(f"{k} {r.M:.4f}" for k, r in reports.items()),
              flush=True)
    means = {k: float(np.mean(v)) for k, v in scores.items()}
    print("mean:   " + "  ".join(f"{k} {v:.4f}" for k, v in means.items()))
    print(f"agent / random = {means['agent'] / means['random']:.2f}")


if __name__ == "__main__":
    main()
