"""Command-line front end: intrinsic, extrinsic, curve and diag subcommands.

Exit codes: 0 success, 1 configuration error, 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation
from .config import RunConfig, load_config
from .perception import FormatError
from .planner import diagnostics
from .sim import ConfigurationError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("openended")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--actions", type=int, dest="intrinsic_actions",
                   help="intrinsic-phase length N")
    p.add_argument("--mode", choices=("round1", "round2"))
    p.add_argument("--objects", type=int)
    p.add_argument("--latents", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--goals", type=int)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="openended", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("intrinsic", help="explore and write artifact files")
    _common(p)

    p = sub.add_parser("extrinsic", help="score a policy on generated goals")
    _common(p)
    p.add_argument("--artifacts", help="artifact directory (default: --out)")
    p.add_argument("--policy", choices=("agent", "random", "still"), default="agent")
    p.add_argument("--csv", help="report path (default: OUT/scores_POLICY.csv)")

    p = sub.add_parser("curve", help="score versus intrinsic-phase length")
    _common(p)
    p.add_argument("--grid", default="200,1000,5000", help="comma-separated N values")
    p.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p.add_argument("--jobs", type=int, default=1, help="parallel (N, seed) runs")
    p.add_argument("--csv", help="output path (default: OUT/curve.csv)")

    p = sub.add_parser("diag", help="branching factor and distinct states per level")
    _common(p)
    p.add_argument("--artifacts", help="artifact directory (default: --out)")
    p.add_argument("--samples", type=int, default=50, help="query states sampled from the store")
    p.add_argument("--csv", help="output path (default: OUT/diag.csv)")
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in
                 ("seed", "intrinsic_actions", "mode", "objects", "latents", "levels",
                  "goals", "out")}
    return load_config(args.config, **overrides)


def _int_list(text: str, name: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"--{name} expects comma-separated integers, got {text!r}") from None
    if not values:
        raise ConfigurationError(f"--{name} is empty")
    return values


def cmd_intrinsic(cfg: RunConfig) -> int:
    result = evaluation.run_intrinsic(cfg, cfg.out)
    print(f"wrote {len(result.artifacts.store)} triplets to {cfg.out} "
          f"(config {cfg.fingerprint()})")
    return EXIT_OK


def cmd_extrinsic(cfg: RunConfig, artifacts_dir=None, policy="agent", csv_path=None) -> int:
    art_dir = Path(artifacts_dir or cfg.out)
    artifacts = evaluation.load_artifacts(art_dir)
    if artifacts.encoder.m != cfg.latents:
        log.warning("artifact encoder has m=%d; config says %d", artifacts.encoder.m, cfg.latents)
    report = evaluation.run_extrinsic(artifacts, evaluation.goals_for(cfg), cfg, policy)
    out = Path(csv_path) if csv_path else Path(cfg.out) / f"scores_{policy}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(out)
    print(f"M = {report.M:.6f} over {len(report.trials)} goals ({policy}, config "
          f"{cfg.fingerprint()}) -> {out}")
    return EXIT_OK


def curve_point(cfg: RunConfig) -> float:
    """Agent mean score after a fresh intrinsic phase with ``cfg``."""
    result = evaluation.run_intrinsic(cfg)
    return evaluation.run_extrinsic(result.artifacts, evaluation.goals_for(cfg), cfg, "agent").M


def cmd_curve(cfg: RunConfig, grid, seeds, jobs=1, csv_path=None) -> int:
    points = [(n, s) for n in grid for s in seeds]
    configs = [cfg.replace(intrinsic_actions=n, seed=s) for n, s in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(curve_point, configs))
    else:
        scores = [curve_point(c) for c in configs]
    out = Path(csv_path) if csv_path else Path(cfg.out) / "curve.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["intrinsic_actions", "seed", "M", "config"])
        for (n, s), m, c in zip(points, scores, configs):
            w.writerow([n, s, repr(m), c.fingerprint()])
        f.write(f"# config={cfg.replace(intrinsic_actions=grid[0], seed=seeds[0]).fingerprint()}"
                f" grid={','.join(map(str, grid))} seeds={','.join(map(str, seeds))}\n")
    for n in grid:
        mean = np.mean([m for (gn, _), m in zip(points, scores) if gn == n])
        print(f"N={n}: mean M = {mean:.4f}")
    print(f"-> {out}")
    return EXIT_OK


def cmd_diag(cfg: RunConfig, artifacts_dir=None, samples=50, csv_path=None) -> int:
    art_dir = Path(artifacts_dir or cfg.out)
    artifacts = evaluation.load_artifacts(art_dir)
    store = artifacts.store
    if len(store) == 0:
        raise ConfigurationError("artifact store is empty")
    rng = np.random.default_rng([cfg.seed, 99])
    idx = np.sort(rng.choice(len(store), size=min(samples, len(store)), replace=False))
    d = diagnostics(store, artifacts.table, store.pre_latents[idx])
    out = Path(csv_path) if csv_path else Path(cfg.out) / "diag.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    fp = ""
    manifest = art_dir / evaluation.MANIFEST_FILE
    if manifest.exists():
        fp = json.loads(manifest.read_text()).get("config_fingerprint", "")
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["level", "branching", "distinct_states"])
        for lv, b, n in zip(d.levels, d.branching, d.distinct_states):
            w.writerow([int(lv), repr(float(b)), int(n)])
        f.write(f"# config={fp} samples={len(idx)} seed={cfg.seed}\n")
    print(f"diagnostics for {len(d.levels)} levels -> {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "intrinsic":
            return cmd_intrinsic(cfg)
        if args.command == "extrinsic":
            return cmd_extrinsic(cfg, args.artifacts, args.policy, args.csv)
        if args.command == "curve":
            return cmd_curve(cfg, _int_list(args.grid, "grid"), _int_list(args.seeds, "seeds"),
                             args.jobs, args.csv)
        return cmd_diag(cfg, args.artifacts, args.samples, args.csv)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
