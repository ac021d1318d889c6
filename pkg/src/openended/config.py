"""Run configuration: dataclass defaults, key=value files, fingerprints."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .explorer import ExplorationMode
from .sim import ConfigurationError, TableGeometry


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    intrinsic_actions: int = 5000
    mode: str = "round1"
    objects: int = 1
    latents: int = 7
    levels: int = 200
    goals: int = 50
    trial_timesteps: int = 10_000
    goal_actions_min: int = 1
    goal_actions_max: int = 5
    goal_layout: str = "independent"  # or "shared": goals and trials start from the intrinsic layout
    # geometry
    table_width: float = 0.70
    table_depth: float = 0.50
    shelf_depth: float = 0.15
    effector_radius: float = 0.02
    object_radius: float = 0.03
    image_width: int = 64
    image_height: int = 48
    # background model
    bg_alpha: float = 0.05
    bg_k: float = 4.0
    bg_burn_in: int = 50
    bg_variance_floor: float = 1e-6
    smoothing_sigma: float = 12.0  # pixels, applied to foreground before encoding
    # planner
    heuristic: str = "manhattan"
    level_stride: int = 1
    out: str = "runs/default"

    def __post_init__(self):
        validate(self)

    @property
    def geometry(self) -> TableGeometry:
        return TableGeometry(self.table_width, self.table_depth, self.shelf_depth,
                             self.effector_radius, self.image_width, self.image_height)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self, include_out: bool = True) -> str:
        lines = []
        for f in fields(self):
            if f.name == "out" and not include_out:
                continue
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        """Hash of every parameter that affects results (the output path does not)."""
        return hashlib.sha256(self.to_text(include_out=False).encode()).hexdigest()[:16]


_POSITIVE = ("intrinsic_actions", "latents", "goals", "trial_timesteps", "table_width",
             "table_depth", "shelf_depth", "effector_radius", "object_radius", "image_width",
             "image_height", "bg_alpha", "bg_k", "bg_burn_in", "bg_variance_floor", "level_stride")


def validate(cfg: RunConfig) -> None:
    for name in _POSITIVE:
        if getattr(cfg, name) <= 0:
            raise ConfigurationError(f"{name} must be positive, got {getattr(cfg, name)}")
    if cfg.objects not in (1, 2, 3):
        raise ConfigurationError(f"objects must be 1, 2 or 3, got {cfg.objects}")
    if cfg.levels < 2:
        raise ConfigurationError("levels must be >= 2")
    if cfg.seed < 0:
        raise ConfigurationError("seed must be nonnegative")
    if not 0 <= cfg.goal_actions_min <= cfg.goal_actions_max:
        raise ConfigurationError("need 0 <= goal_actions_min <= goal_actions_max")
    if cfg.smoothing_sigma < 0:
        raise ConfigurationError("smoothing_sigma must be nonnegative")
    if cfg.goal_layout not in ("independent", "shared"):
        raise ConfigurationError(f"goal_layout must be independent or shared, got {cfg.goal_layout!r}")
    if cfg.heuristic not in ("manhattan", "zero"):
        raise ConfigurationError(f"unknown heuristic {cfg.heuristic!r}")
    try:
        ExplorationMode.parse(cfg.mode)
    except ValueError:
        raise ConfigurationError(f"mode must be round1 or round2, got {cfg.mode!r}") from None
    if not 0 < cfg.bg_alpha < 1:
        raise ConfigurationError("bg_alpha must lie in (0, 1)")


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise ConfigurationError(f"unknown config key {name!r}")
    kind = types[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from None


def parse_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        try:
            values.update(parse_text(Path(path).read_text()))
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
