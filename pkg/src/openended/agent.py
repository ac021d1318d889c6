"""Agent state machine coordinating exploration, memory and planning."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import memory
from .explorer import ExplorationMode, propose_action
from .perception import perceive
from .planner import Plan, PlanningGraph, compute_max_depth, plan
from .sim import PushAction, TableGeometry

log = logging.getLogger(__name__)


class AgentPhase(enum.Enum):
    ACTION_START = "ActionStart"
    PROPOSE_ACTION = "ProposeAction"
    PLAN_ACTION = "PlanAction"
    DO_ACTION = "DoAction"
    END_ACTION = "EndAction"
    WAIT_FOR_GOAL = "WaitForGoal"


class PhaseInconsistencyError(RuntimeError):
    """Goal presence does not match the agent's phase."""


@dataclass
class Artifacts:
    """Everything the extrinsic phase needs from the intrinsic phase."""

    store: memory.TripletStore
    background: object
    encoder: object
    table: object
    smoothing: float = 0.0


class Agent:
    """Explores when no goal is given, plans toward the goal otherwise.

    Call :meth:`step` with each fresh observation. The observation passed
    after an action has been executed closes that action (EndAction) before
    the next decision is taken; :meth:`end_action` closes it explicitly.
    """

    def __init__(self, geometry: TableGeometry, rng: np.random.Generator, mode="round1",
                 store: memory.TripletStore | None = None, artifacts: Artifacts | None = None,
                 heuristic: str = "manhattan", stride: int = 1):
        self.geometry = geometry
        self.rng = rng
        self.mode = ExplorationMode.parse(mode)
        self.store = store if store is not None else memory.TripletStore()
        self.artifacts = artifacts
        self.heuristic = heuristic
        self.stride = stride
        self.phase = AgentPhase.ACTION_START
        self.pending_plan: Plan | None = None
        self.pre_snapshot: np.ndarray | None = None
        self.action: PushAction | None = None
        self.extrinsic: bool | None = None
        self._graph: PlanningGraph | None = None
        self._goal_key: bytes | None = None
        self.plans: list[Plan | None] = []

    @property
    def graph(self) -> PlanningGraph:
        if self._graph is None:
            a = self.artifacts
            self._graph = PlanningGraph(a.store, a.table)
        return self._graph

    def begin_trial(self) -> None:
        """Forget any pending action and wait state before a new goal."""
        self.phase = AgentPhase.ACTION_START
        self.pending_plan = None
        self.pre_snapshot = None
        self.action = None
        self._goal_key = None

    def end_action(self, observation) -> None:
        if self.phase is not AgentPhase.DO_ACTION:
            return
        self.phase = AgentPhase.END_ACTION
        if not self.extrinsic:
            memory.record(self.store, self.pre_snapshot, self.action, observation)
        self.pre_snapshot = None
        self.action = None
        self.phase = AgentPhase.ACTION_START

    def step(self, observation, goal=None, remaining_timesteps: int | None = None):
        """Return the next action, or None to stay still."""
        extrinsic = goal is not None
        if self.extrinsic is not None and extrinsic != self.extrinsic:
            if extrinsic and self.phase is AgentPhase.DO_ACTION:
                raise PhaseInconsistencyError("goal arrived while an intrinsic action is open")
            if not extrinsic:
                raise PhaseInconsistencyError("goal missing during the extrinsic phase")
        self.end_action(observation)
        self.extrinsic = extrinsic

        if extrinsic:
            key = np.asarray(goal).tobytes()
            if key != self._goal_key:
                self._goal_key = key
                if self.phase is AgentPhase.WAIT_FOR_GOAL:
                    self.phase = AgentPhase.ACTION_START
            if self.phase is AgentPhase.WAIT_FOR_GOAL:
                return None
            return self._plan_action(observation, goal, remaining_timesteps)

        self.phase = AgentPhase.PROPOSE_ACTION
        action = propose_action(self.rng, self.mode, self.geometry)
        return self._do(observation, action)

    def _do(self, observation, action: PushAction) -> PushAction:
        self.phase = AgentPhase.DO_ACTION
        self.pre_snapshot = np.asarray(observation, dtype=np.float32)
        self.action = action
        return action

    def _plan_action(self, observation, goal, remaining_timesteps):
        if self.artifacts is None:
            raise PhaseInconsistencyError("extrinsic step without intrinsic artifacts")
        if remaining_timesteps is None:
            raise ValueError("remaining_timesteps is required in the extrinsic phase")
        self.phase = AgentPhase.PLAN_ACTION
        a = self.artifacts
        current = perceive(observation, a.encoder, a.background, a.smoothing)
        target = perceive(goal, a.encoder, a.background, a.smoothing)
        found = plan(current, target, a.store, a.table, compute_max_depth(remaining_timesteps),
                     heuristic=self.heuristic, stride=self.stride, graph=self.graph)
        self.plans.append(found)
        self.pending_plan = found
        if found is None:
            log.debug("no plan at any level; waiting for the next goal")
            self.phase = AgentPhase.WAIT_FOR_GOAL
            return None
        if len(found) == 0:
            self.phase = AgentPhase.ACTION_START
            return None
        return self._do(observation, found.actions[0])
