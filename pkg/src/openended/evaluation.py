"""Intrinsic and extrinsic phases, goal generation and the goal score."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import abstraction, memory, perception
from .agent import Agent, Artifacts
from .config import RunConfig
from .explorer import propose_action
from .perception import BackgroundModel, filtered, fit_encoder, update_background
from .sim import (ACTION_TIMESTEPS, ConfigurationError, ObjectState, TableGeometry, WorldState,
                  apply_action, random_layout, render, reset)

log = logging.getLogger(__name__)

# exp(-c * 0.10) == 0.25
DECAY = math.log(4.0) / 0.10

# independent random streams derived from the run seed
STREAM_EXPLORE, STREAM_LAYOUT, STREAM_GOALS, STREAM_RANDOM_POLICY, STREAM_ENCODER = range(5)

STORE_FILE = "store.oelt"
ENCODER_FILE = "encoder.oele"
BACKGROUND_FILE = "background.oelb"
THRESHOLDS_FILE = "thresholds.csv"
MANIFEST_FILE = "manifest.json"


def stream(seed: int, which: int) -> np.random.Generator:
    return np.random.default_rng([seed, which])


def _as_xyz(p) -> np.ndarray:
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    if p.shape[1] == 2:
        p = np.hstack([p, np.zeros((p.shape[0], 1))])
    return p


def goal_score(targets, finals) -> float:
    """Sum over objects of exp(-c * distance), one term per object in (0, 1]."""
    t, f = _as_xyz(targets), _as_xyz(finals)
    if t.shape != f.shape:
        raise ValueError(f"object count mismatch: {t.shape[0]} targets, {f.shape[0]} finals")
    return float(np.sum(np.exp(-DECAY * np.linalg.norm(t - f, axis=1))))


@dataclass(frozen=True, eq=False)
class GoalSpec:
    goal_image: np.ndarray
    target_positions: np.ndarray  # (n, 3), z = 0
    initial_layout: tuple[ObjectState, ...]


def generate_goals(rng: np.random.Generator, G: int, geometry: TableGeometry,
                   base_layout=None, n_objects: int = 1, mode="round1",
                   actions_range: tuple[int, int] = (1, 5),
                   object_radius: float = 0.03) -> list[GoalSpec]:
    """Goals reachable by construction: push a layout around and photograph it.

    With ``base_layout`` every goal starts from it and every trial starts
    there too. Otherwise each goal is pushed from its own random layout and
    the trial begins from a fresh, independent random layout.
    """
    if G < 1:
        raise ConfigurationError("need at least one goal")
    lo, hi = actions_range
    goals = []
    for _ in range(G):
        if base_layout is not None:
            base = initial = tuple(base_layout)
        else:
            base = tuple(random_layout(rng, geometry, n_objects, object_radius))
            initial = tuple(random_layout(rng, geometry, n_objects, object_radius))
        state = reset(geometry, base)
        for _ in range(int(rng.integers(lo, hi + 1))):
            state = apply_action(state, propose_action(rng, mode, geometry), geometry)
        goals.append(GoalSpec(render(state, geometry), _as_xyz(state.positions), initial))
    return goals


def initial_layout(cfg: RunConfig) -> list[ObjectState]:
    return random_layout(stream(cfg.seed, STREAM_LAYOUT), cfg.geometry, cfg.objects,
                         cfg.object_radius)


def goals_for(cfg: RunConfig, base_layout=None) -> list[GoalSpec]:
    if base_layout is None and cfg.goal_layout == "shared":
        base_layout = initial_layout(cfg)
    return generate_goals(stream(cfg.seed, STREAM_GOALS), cfg.goals, cfg.geometry, base_layout,
                          cfg.objects, cfg.mode, (cfg.goal_actions_min, cfg.goal_actions_max),
                          cfg.object_radius)


@dataclass
class IntrinsicResult:
    artifacts: Artifacts
    final_state: WorldState


def run_intrinsic(cfg: RunConfig, out_dir=None) -> IntrinsicResult:
    """Random exploration, then encoder fitting, encoding and thresholds."""
    geometry = cfg.geometry
    state = reset(geometry, initial_layout(cfg), cfg.seed)
    agent = Agent(geometry, stream(cfg.seed, STREAM_EXPLORE), cfg.mode,
                  store=memory.TripletStore((cfg.image_height, cfg.image_width)))
    bg = BackgroundModel((cfg.image_height, cfg.image_width), cfg.bg_alpha, cfg.bg_k,
                         cfg.bg_variance_floor, cfg.bg_burn_in)
    obs = render(state, geometry)
    update_background(bg, obs)
    for _ in range(cfg.intrinsic_actions):
        action = agent.step(obs)
        state = apply_action(state, action, geometry)
        obs = render(state, geometry)
        update_background(bg, obs)
    agent.end_action(obs)
    store = agent.store
    if not bg.ready:
        log.warning("background model saw %d < %d frames; encoding raw images",
                    bg.frames_seen, bg.burn_in)

    sigma = cfg.smoothing_sigma
    images = [filtered(im, bg, sigma) for im in store.pre_images]
    images += [filtered(im, bg, sigma) for im in store.post_images]
    encoder = fit_encoder(images, cfg.latents, seed=cfg.seed)
    memory.encode_all(store, encoder, bg, sigma)
    table = abstraction.thresholds_from_store(store, cfg.levels)
    artifacts = Artifacts(store, bg, encoder, table, sigma)
    if out_dir is not None:
        save_artifacts(artifacts, out_dir, cfg, final_timestep=state.timestep)
    return IntrinsicResult(artifacts, state)


def save_artifacts(artifacts: Artifacts, out_dir, cfg: RunConfig, **extra) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    memory.save(artifacts.store, out / STORE_FILE)
    perception.save_encoder(artifacts.encoder, out / ENCODER_FILE)
    perception.save_background(artifacts.background, out / BACKGROUND_FILE)
    abstraction.save_csv(artifacts.table, out / THRESHOLDS_FILE)
    manifest = {"config_fingerprint": cfg.fingerprint(), "seed": cfg.seed,
                "triplets": len(artifacts.store), "smoothing": artifacts.smoothing,
                "config": cfg.to_text(include_out=False)}
    manifest.update(extra)
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_artifacts(out_dir) -> Artifacts:
    out = Path(out_dir)
    store = memory.load(out / STORE_FILE)
    encoder = perception.load_encoder(out / ENCODER_FILE)
    bg = perception.load_background(out / BACKGROUND_FILE)
    table = abstraction.load_csv(out / THRESHOLDS_FILE)
    smoothing = 0.0
    if (out / MANIFEST_FILE).exists():
        smoothing = float(json.loads((out / MANIFEST_FILE).read_text()).get("smoothing", 0.0))
    return Artifacts(store, bg, encoder, table, smoothing)


# Policies for the extrinsic phase


class StillPolicy:
    """Never acts."""

    def begin_trial(self):
        pass

    def step(self, observation, goal=None, remaining_timesteps=None):
        return None

    def end_action(self, observation):
        pass


class RandomPolicy:
    """Random explorer actions until the budget runs out."""

    def __init__(self, geometry: TableGeometry, rng: np.random.Generator, mode="round1"):
        self.geometry, self.rng, self.mode = geometry, rng, mode

    def begin_trial(self):
        pass

    def step(self, observation, goal=None, remaining_timesteps=None):
        return propose_action(self.rng, self.mode, self.geometry)

    def end_action(self, observation):
        pass


def make_policy(kind: str, cfg: RunConfig, artifacts: Artifacts | None):
    if kind == "agent":
        return Agent(cfg.geometry, stream(cfg.seed, STREAM_EXPLORE), cfg.mode,
                     artifacts=artifacts, heuristic=cfg.heuristic, stride=cfg.level_stride)
    if kind == "random":
        return RandomPolicy(cfg.geometry, stream(cfg.seed, STREAM_RANDOM_POLICY), cfg.mode)
    if kind == "still":
        return StillPolicy()
    raise ConfigurationError(f"unknown policy {kind!r}")


@dataclass
class TrialResult:
    goal_id: int
    score: float
    distances: np.ndarray
    actions: int
    timesteps: int
    plan_levels: list = field(default_factory=list)


@dataclass
class ScoreReport:
    trials: list[TrialResult]
    config_fingerprint: str = ""
    seeds: tuple[int, ...] = ()
    policy: str = "agent"

    @property
    def scores(self) -> np.ndarray:
        return np.array([t.score for t in self.trials])

    @property
    def M(self) -> float:
        return float(np.mean(self.scores))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["goal_id", "M_g", "distance_m", "actions", "timesteps"])
            for t in self.trials:
                w.writerow([t.goal_id, repr(t.score), repr(float(np.mean(t.distances))),
                            t.actions, t.timesteps])
            f.write(f"# M={self.M!r} goals={len(self.trials)} policy={self.policy} "
                    f"config={self.config_fingerprint} seeds={','.join(map(str, self.seeds))}\n")


def run_trial(policy, goal: GoalSpec, geometry: TableGeometry, budget: int = 10_000):
    state = reset(geometry, goal.initial_layout)
    policy.begin_trial()
    actions = 0
    while budget - state.timestep >= ACTION_TIMESTEPS:
        obs = render(state, geometry)
        action = policy.step(obs, goal.goal_image, budget - state.timestep)
        if action is None:
            # the scene will not change, so neither will the decision
            break
        state = apply_action(state, action, geometry)
        actions += 1
    policy.end_action(render(state, geometry))
    return state, actions


def run_extrinsic(artifacts: Artifacts | None, goals: list[GoalSpec], cfg: RunConfig,
                  policy: str = "agent") -> ScoreReport:
    geometry = cfg.geometry
    pol = make_policy(policy, cfg, artifacts)
    trials = []
    for gid, goal in enumerate(goals):
        state, n_actions = run_trial(pol, goal, geometry, cfg.trial_timesteps)
        finals = _as_xyz(state.positions)
        dist = np.linalg.norm(goal.target_positions - finals, axis=1)
        levels = []
        if isinstance(pol, Agent):
            levels = [p.level if p is not None else None for p in pol.plans]
            pol.plans.clear()
        trials.append(TrialResult(gid, goal_score(goal.target_positions, finals), dist,
                                  n_actions, state.timestep, levels))
        log.debug("goal %d: M_g=%.4f actions=%d", gid, trials[-1].score, n_actions)
    return ScoreReport(trials, cfg.fingerprint(), (cfg.seed,), policy)


def run_experiment(cfg: RunConfig, policies=("agent",), out_dir=None) -> dict[str, ScoreReport]:
    """Intrinsic phase followed by the extrinsic phase for each policy."""
    result = run_intrinsic(cfg, out_dir)
    goals = goals_for(cfg)
    return {p: run_extrinsic(result.artifacts, goals, cfg, p) for p in policies}
