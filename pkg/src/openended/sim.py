"""Planar push world.

Objects are discs on a rectangular table whose back strip is a shelf that
planar pushes cannot reach. An action is a polyline swept by a small disc
effector; any object the effector runs into is carried ahead of it so that
the two discs stay tangent. The effector only exists while an action runs,
which stands in for the arm returning to its home pose.

Coordinates are meters with x along the table width and y from the front
edge (y = 0) to the back edge (y = depth). The shelf occupies
``y > depth - shelf_depth``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

ACTION_TIMESTEPS = 1000
MIN_WAYPOINTS = 2
MAX_WAYPOINTS = 11


class ConfigurationError(ValueError):
    """Invalid geometry, layout or run configuration."""


@dataclass(frozen=True)
class TableGeometry:
    width: float = 0.70
    depth: float = 0.50
    shelf_depth: float = 0.15
    effector_radius: float = 0.02
    image_width: int = 64
    image_height: int = 48

    def __post_init__(self):
        if self.width <= 0 or self.depth <= 0:
            raise ConfigurationError("table width and depth must be positive")
        if not 0 < self.shelf_depth < self.depth:
            raise ConfigurationError("shelf_depth must lie in (0, depth)")
        if self.effector_radius <= 0:
            raise ConfigurationError("effector_radius must be positive")
        if self.image_width < 1 or self.image_height < 1:
            raise ConfigurationError("image size must be positive")

    @property
    def reach_depth(self) -> float:
        """y coordinate of the shelf edge; planar pushes stay below it."""
        return self.depth - self.shelf_depth

    def object_bounds(self, radius: float) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) for the center of a disc of ``radius``."""
        return radius, self.width - radius, radius, self.reach_depth - radius


@dataclass(frozen=True)
class ObjectState:
    id: int
    center: tuple[float, float]
    radius: float = 0.03


@dataclass(frozen=True)
class WorldState:
    objects: tuple[ObjectState, ...]
    timestep: int = 0

    @property
    def positions(self) -> np.ndarray:
        return np.array([o.center for o in self.objects], dtype=np.float64)


@dataclass(frozen=True)
class PushAction:
    waypoints: tuple[tuple[float, float], ...]
    duration: int = field(default=ACTION_TIMESTEPS)

    @property
    def segments(self) -> int:
        return len(self.waypoints) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.waypoints, dtype=np.float64)


def validate_action(action: PushAction, geometry: TableGeometry) -> None:
    n = len(action.waypoints)
    if not MIN_WAYPOINTS <= n <= MAX_WAYPOINTS:
        raise ConfigurationError(f"action needs 2..11 waypoints, got {n}")
    if action.duration != ACTION_TIMESTEPS:
        raise ConfigurationError("action duration is fixed at 1000 timesteps")
    for x, y in action.waypoints:
        if not (0.0 <= x <= geometry.width and 0.0 <= y <= geometry.depth):
            raise ConfigurationError(f"waypoint ({x}, {y}) off the table")


def _in_bounds(obj: ObjectState, geometry: TableGeometry) -> bool:
    xmin, xmax, ymin, ymax = geometry.object_bounds(obj.radius)
    x, y = obj.center
    return xmin <= x <= xmax and ymin <= y <= ymax


def reset(geometry: TableGeometry, layout, seed: int = 0) -> WorldState:
    """Place ``layout`` on the table at timestep 0.

    ``seed`` is accepted for interface symmetry with stochastic resets; the
    placement itself is taken verbatim from ``layout``.
    """
    objects = tuple(layout)
    if not 1 <= len(objects) <= 3:
        raise ConfigurationError("layout must hold 1 to 3 objects")
    if len({o.id for o in objects}) != len(objects):
        raise ConfigurationError("object ids must be unique")
    for o in objects:
        if o.radius <= 0:
            raise ConfigurationError(f"object {o.id} has nonpositive radius")
        if not _in_bounds(o, geometry):
            raise ConfigurationError(f"object {o.id} at {o.center} is out of bounds")
    for i, a in enumerate(objects):
        for b in objects[i + 1:]:
            gap = math.dist(a.center, b.center)
            if gap < a.radius + b.radius:
                raise ConfigurationError(f"objects {a.id} and {b.id} overlap")
    objects = tuple(sorted(objects, key=lambda o: o.id))
    return WorldState(objects=objects, timestep=0)


def random_layout(rng: np.random.Generator, geometry: TableGeometry, n_objects: int,
                  radius: float = 0.03, max_tries: int = 1000) -> list[ObjectState]:
    """Uniform non-overlapping placement over the reachable table region."""
    xmin, xmax, ymin, ymax = geometry.object_bounds(radius)
    placed: list[ObjectState] = []
    for _ in range(max_tries):
        if len(placed) == n_objects:
            break
        c = (float(rng.uniform(xmin, xmax)), float(rng.uniform(ymin, ymax)))
        if all(math.dist(c, p.center) >= 2 * radius for p in placed):
            placed.append(ObjectState(id=len(placed), center=c, radius=radius))
    if len(placed) != n_objects:
        raise ConfigurationError("could not place objects without overlap")
    return placed


def _push_along_segment(center: np.ndarray, a: np.ndarray, b: np.ndarray,
                        contact_radius: float) -> np.ndarray:
    """Closed-form result of sweeping the effector from ``a`` to ``b``.

    An object whose center is ahead of the effector start (along the segment)
    and within ``contact_radius`` of the segment line is reached and carried
    to the tangent position ahead of ``b``.
    """
    seg = b - a
    length = math.hypot(seg[0], seg[1])
    if length == 0.0:
        return center
    u = seg / length
    rel = center - a
    along = rel[0] * u[0] + rel[1] * u[1]
    perp = rel[0] * -u[1] + rel[1] * u[0]
    if abs(perp) >= contact_radius or along < 0.0:
        return center
    half_chord = math.sqrt(contact_radius * contact_radius - perp * perp)
    final_along = length + half_chord
    if along >= final_along:
        return center
    return center + (final_along - along) * u


def clamp_center(center: np.ndarray, radius: float, geometry: TableGeometry) -> np.ndarray:
    xmin, xmax, ymin, ymax = geometry.object_bounds(radius)
    return np.array([min(max(center[0], xmin), xmax), min(max(center[1], ymin), ymax)])


def apply_action(state: WorldState, action: PushAction, geometry: TableGeometry) -> WorldState:
    """Sweep the effector along ``action`` and return the resulting state.

    Each segment is applied to each object in id order; objects do not push
    each other. Centers are clamped to the reachable region at the end of
    every segment.
    """
    validate_action(action, geometry)
    pts = action.as_array()
    centers = [np.array(o.center, dtype=np.float64) for o in state.objects]
    for a, b in zip(pts[:-1], pts[1:]):
        for i, obj in enumerate(state.objects):
            moved = _push_along_segment(centers[i], a, b, geometry.effector_radius + obj.radius)
            centers[i] = clamp_center(moved, obj.radius, geometry)
    objects = tuple(
        replace(o, center=(float(c[0]), float(c[1]))) for o, c in zip(state.objects, centers)
    )
    return WorldState(objects=objects, timestep=state.timestep + action.duration)


# Rendering

BACKGROUND_LIGHT = 0.30
BACKGROUND_DARK = 0.22
SHELF_LEVEL = 0.55
SHELF_EDGE_LEVEL = 0.75
OBJECT_LEVELS = (1.0, 0.9, 0.05)


@functools.lru_cache(maxsize=8)
def pixel_centers(geometry: TableGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Metric (x, y) of every pixel center; row 0 is the back edge."""
    w, h = geometry.image_width, geometry.image_height
    xs = (np.arange(w) + 0.5) * geometry.width / w
    ys = geometry.depth - (np.arange(h) + 0.5) * geometry.depth / h
    px, py = np.meshgrid(xs, ys)
    px.flags.writeable = False
    py.flags.writeable = False
    return px, py


def pixel_size(geometry: TableGeometry) -> float:
    return max(geometry.width / geometry.image_width, geometry.depth / geometry.image_height)


def background_image(geometry: TableGeometry) -> np.ndarray:
    """Static table texture: a coarse checkerboard, the shelf, and its edge."""
    return _background(geometry).copy()


@functools.lru_cache(maxsize=8)
def _background(geometry: TableGeometry) -> np.ndarray:
    px, py = pixel_centers(geometry)
    cols = np.floor(px / 0.05).astype(int)
    rows = np.floor(py / 0.05).astype(int)
    img = np.where((cols + rows) % 2 == 0, BACKGROUND_LIGHT, BACKGROUND_DARK)
    img = np.where(py > geometry.reach_depth, SHELF_LEVEL, img)
    edge = np.abs(py - geometry.reach_depth) <= 0.5 * geometry.depth / geometry.image_height
    img = np.where(edge, SHELF_EDGE_LEVEL, img)
    return img.astype(np.float32)


def disc_coverage(center, radius: float, geometry: TableGeometry) -> np.ndarray:
    """Fractional coverage of each pixel by a disc, with a one-pixel linear edge."""
    px, py = pixel_centers(geometry)
    dist = np.hypot(px - center[0], py - center[1])
    return np.clip((radius - dist) / pixel_size(geometry) + 0.5, 0.0, 1.0)


def object_level(obj_id: int) -> float:
    return OBJECT_LEVELS[obj_id % len(OBJECT_LEVELS)]


def render(state: WorldState, geometry: TableGeometry) -> np.ndarray:
    """Top-down grayscale image in [0, 1], shape (image_height, image_width)."""
    img = _background(geometry).astype(np.float64)
    for obj in state.objects:
        cov = disc_coverage(obj.center, obj.radius, geometry)
        img = img * (1.0 - cov) + object_level(obj.id) * cov
    return img.astype(np.float32)
