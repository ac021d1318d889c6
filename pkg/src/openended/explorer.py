"""Random push proposals for the intrinsic phase."""

from __future__ import annotations

import enum

import numpy as np

from .sim import PushAction, TableGeometry


class ExplorationMode(enum.Enum):
    ROUND1 = "round1"  # single start/end push
    ROUND2 = "round2"  # polyline of 1..10 segments

    @classmethod
    def parse(cls, value) -> "ExplorationMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


MAX_SEGMENTS = 10


def _points(rng: np.random.Generator, geometry: TableGeometry, k: int):
    xs = rng.uniform(0.0, geometry.width, size=k)
    ys = rng.uniform(0.0, geometry.reach_depth, size=k)
    # stored as float32 on disk; round now so replayed actions are identical
    xs = np.minimum(xs.astype(np.float32), _f32_below(geometry.width))
    ys = np.minimum(ys.astype(np.float32), _f32_below(geometry.reach_depth))
    return tuple((float(x), float(y)) for x, y in zip(xs, ys))


def _f32_below(bound: float) -> np.float32:
    v = np.float32(bound)
    return v if float(v) <= bound else np.nextafter(v, np.float32(0))


def propose_action(rng: np.random.Generator, mode, geometry: TableGeometry) -> PushAction:
    mode = ExplorationMode.parse(mode)
    if mode is ExplorationMode.ROUND1:
        return PushAction(_points(rng, geometry, 2))
    segments = int(rng.integers(1, MAX_SEGMENTS + 1))
    return PushAction(_points(rng, geometry, segments + 1))
