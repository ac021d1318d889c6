"""Graded same-state thresholds learned from experienced latent changes.

For every latent coordinate the absolute pre/post change of each experienced
action is collected and sorted. Level 1 uses the smallest change as the
same-state threshold, level L the largest, and intermediate levels pick
evenly spaced ranks of the sorted changes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .sim import ConfigurationError


@dataclass(frozen=True, eq=False)
class ThresholdTable:
    """``distances[level - 1, j]`` is the threshold of latent j at ``level``."""

    distances: np.ndarray

    @property
    def levels(self) -> int:
        return self.distances.shape[0]

    @property
    def m(self) -> int:
        return self.distances.shape[1]

    def row(self, level: int) -> np.ndarray:
        check_level(level, self.levels)
        return self.distances[level - 1]

    def match_level(self, a, b) -> np.ndarray:
        """Smallest level at which ``a`` and ``b`` count as the same state.

        Broadcasts over leading axes; ``levels + 1`` means never.
        """
        diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
        return self.diff_level(diff)

    def diff_level(self, diff: np.ndarray) -> np.ndarray:
        diff = np.asarray(diff, dtype=np.float64)
        out = np.zeros(diff.shape[:-1], dtype=np.int32)
        for j in range(self.m):
            idx = np.searchsorted(self.distances[:, j], diff[..., j], side="left")
            np.maximum(out, idx, out=out)
        return out + 1


def check_level(level: int, levels: int) -> None:
    if not 1 <= level <= levels:
        raise ValueError(f"abstraction level {level} outside [1, {levels}]")


def level_ranks(n_samples: int, levels: int) -> np.ndarray:
    """Rank into the sorted changes used at each level (0-based)."""
    lv = np.arange(levels, dtype=np.int64)
    # round-half-to-even on exact rationals; integer arithmetic avoids float drift
    num = lv * (n_samples - 1)
    den = levels - 1
    q, r = np.divmod(num, den)
    up = (2 * r > den) | ((2 * r == den) & (q % 2 == 1))
    return q + up


def build_thresholds(pre_latents, post_latents, levels: int = 200) -> ThresholdTable:
    """Threshold table from paired pre/post latents (shape T x m each)."""
    pre = np.asarray(pre_latents, dtype=np.float64)
    post = np.asarray(post_latents, dtype=np.float64)
    if pre.ndim != 2 or pre.shape != post.shape:
        raise ConfigurationError("pre and post latents must be equal-shape T x m arrays")
    if pre.shape[0] < 1:
        raise ConfigurationError("at least one encoded triplet is needed")
    if levels < 2:
        raise ConfigurationError("need at least 2 abstraction levels")
    diffs = np.sort(np.abs(pre - post), axis=0, kind="stable")
    return ThresholdTable(diffs[level_ranks(diffs.shape[0], levels)])


def thresholds_from_store(store, levels: int = 200) -> ThresholdTable:
    if not store.encoded or len(store) == 0:
        raise ConfigurationError("store must hold at least one encoded triplet")
    return build_thresholds(store.pre_latents, store.post_latents, levels)


def same_state(a, b, level: int, table: ThresholdTable) -> bool:
    thr = table.row(level)
    diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    if diff.shape != thr.shape:
        raise ValueError(f"latents of length {diff.shape} do not match table m={table.m}")
    return bool(np.all(diff <= thr))


def save_csv(table: ThresholdTable, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["level"] + [f"latent_{j}" for j in range(table.m)])
        for i, row in enumerate(table.distances, start=1):
            w.writerow([i] + [repr(float(v)) for v in row])


def load_csv(path) -> ThresholdTable:
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    body = rows[1:]
    return ThresholdTable(np.array([[float(v) for v in r[1:]] for r in body], dtype=np.float64))
