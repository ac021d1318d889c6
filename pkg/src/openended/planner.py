"""A* planning over experienced triplets in latent space.

A node is a latent state. From state x at abstraction level l, every
triplet whose pre latent is the same state as x (at level l) is applicable
and leads exactly to that triplet's post latent. The planner searches level
1 first and climbs the ladder until some level yields a plan within the
depth budget.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from .abstraction import ThresholdTable, check_level, same_state
from .sim import ACTION_TIMESTEPS, PushAction


@dataclass(frozen=True, eq=False)
class Plan:
    actions: tuple[PushAction, ...]
    level: int
    predicted_states: tuple[np.ndarray, ...]
    triplets: tuple[int, ...] = ()
    expanded: int = 0

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class SearchDiagnostics:
    levels: np.ndarray
    branching: np.ndarray
    distinct_states: np.ndarray
    per_state_branching: np.ndarray = field(repr=False)
    nodes_expanded: int = 0


def compute_max_depth(remaining_timesteps: int) -> int:
    if remaining_timesteps < 0:
        raise ValueError("remaining timesteps must be nonnegative")
    return remaining_timesteps // ACTION_TIMESTEPS


def successors(state, level: int, store, table: ThresholdTable):
    """(action, post_latent) of every triplet applicable in ``state``, in store order."""
    check_level(level, table.levels)
    thr = table.row(level)
    pre = store.pre_latents.astype(np.float64)
    diff = np.abs(pre - np.asarray(state, dtype=np.float64))
    hits = np.flatnonzero(np.all(diff <= thr, axis=1))
    return [(store.actions[t], store.post_latents[t]) for t in hits]


def manhattan(x: np.ndarray, goal: np.ndarray) -> float:
    return float(np.sum(np.abs(x - goal)))


def zero_heuristic(x: np.ndarray, goal: np.ndarray) -> float:
    return 0.0


HEURISTICS = {"manhattan": manhattan, "zero": zero_heuristic}


class PlanningGraph:
    """Precomputed view of an encoded store shared by many plan queries.

    Post latents are collapsed by exact equality into nodes; the level at
    which each node matches each triplet's pre latent is computed lazily and
    cached.
    """

    def __init__(self, store, table: ThresholdTable):
        if not store.encoded:
            raise ValueError("store must be encoded before planning")
        if table.m != store.m:
            raise ValueError(f"table has m={table.m}, store latents have m={store.m}")
        self.store = store
        self.table = table
        self.pre = store.pre_latents.astype(np.float64)
        post32 = np.ascontiguousarray(store.post_latents)
        self.node_latents32: list[np.ndarray] = []
        self._index: dict[bytes, int] = {}
        post_node = np.empty(len(store), dtype=np.int64)
        for t in range(len(store)):
            post_node[t] = self._intern(post32[t])
        self.post_node = post_node
        self._rows: dict[int, np.ndarray] = {}

    def _intern(self, latent32: np.ndarray) -> int:
        key = latent32.tobytes()
        node = self._index.get(key)
        if node is None:
            node = len(self.node_latents32)
            self._index[key] = node
            self.node_latents32.append(latent32.copy())
        return node

    def node_of(self, latent) -> int:
        """Node id of ``latent``, adding it when unseen."""
        return self._intern(np.ascontiguousarray(latent, dtype=np.float32))

    def latent(self, node: int) -> np.ndarray:
        return self.node_latents32[node].astype(np.float64)

    def pre_levels(self, node: int) -> np.ndarray:
        """Level at which each triplet becomes applicable from ``node``."""
        row = self._rows.get(node)
        if row is None:
            row = self.table.match_level(self.pre, self.latent(node))
            self._rows[node] = row
        return row

    def goal_levels(self, goal) -> np.ndarray:
        nodes = np.array(self.node_latents32, dtype=np.float64)
        return self.table.match_level(nodes, np.asarray(goal, dtype=np.float64))


def astar(start: int, goal, level: int, graph: PlanningGraph, max_depth: int,
          heuristic=manhattan, goal_levels: np.ndarray | None = None):
    """Unit-cost A* at one abstraction level.

    Returns ``(triplet indices, nodes expanded)``; the index list is None when
    no plan of at most ``max_depth`` actions exists. Open-list ties are broken
    first-in first-out; a node is re-opened whenever a shorter path reaches it.
    """
    goal = np.asarray(goal, dtype=np.float64)
    if goal_levels is None:
        goal_levels = graph.goal_levels(goal)
    counter = itertools.count()
    best_g = {start: 0}
    parent: dict[int, tuple[int, int]] = {}
    heap = [(heuristic(graph.latent(start), goal), next(counter), start, 0)]
    expanded = 0
    while heap:
        _, _, node, g = heapq.heappop(heap)
        if g > best_g[node]:
            continue
        if goal_levels[node] <= level:
            path = []
            while node != start:
                node, t = parent[node]
                path.append(t)
            return path[::-1], expanded
        if g >= max_depth:
            continue
        expanded += 1
        applicable = np.flatnonzero(graph.pre_levels(node) <= level)
        if applicable.size == 0:
            continue
        children, first = np.unique(graph.post_node[applicable], return_index=True)
        order = np.argsort(first, kind="stable")
        ng = g + 1
        for child, t in zip(children[order], applicable[first[order]]):
            child = int(child)
            if ng < best_g.get(child, max_depth + 1):
                best_g[child] = ng
                parent[child] = (node, int(t))
                f = ng + heuristic(graph.latent(child), goal)
                heapq.heappush(heap, (f, next(counter), child, ng))
    return None, expanded


def plan(current, goal, store, table: ThresholdTable, max_depth: int,
         heuristic="manhattan", stride: int = 1, graph: PlanningGraph | None = None) -> Plan | None:
    """Search levels 1, 1 + stride, ... until a plan is found; None if none exists.

    Levels below the lowest level at which any known state matches the goal
    cannot succeed and are skipped without searching.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be nonnegative")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    h = HEURISTICS[heuristic] if isinstance(heuristic, str) else heuristic
    if graph is None:
        graph = PlanningGraph(store, table)
    goal = np.asarray(goal, dtype=np.float64)
    start = graph.node_of(current)
    goal_levels = graph.goal_levels(goal)
    reachable = goal_levels if max_depth > 0 else goal_levels[[start]]
    floor_level = int(reachable.min())
    total = 0
    for level in range(1, table.levels + 1, stride):
        if level < floor_level:
            continue
        path, expanded = astar(start, goal, level, graph, max_depth, h, goal_levels)
        total += expanded
        if path is not None:
            states = tuple(store.post_latents[t].copy() for t in path)
            return Plan(tuple(store.actions[t] for t in path), level, states,
                        tuple(path), total)
    return None


def execute_symbolically(current, plan_: Plan, store, table: ThresholdTable) -> np.ndarray:
    """Follow the plan's triplets, checking each is applicable; return the end state."""
    state = np.asarray(current)
    for t in plan_.triplets:
        if not same_state(state, store.pre_latents[t], plan_.level, table):
            raise AssertionError(f"triplet {t} not applicable at level {plan_.level}")
        state = store.post_latents[t]
    return state


def diagnostics(store, table: ThresholdTable, sample_states) -> SearchDiagnostics:
    """Per-level branching factor over ``sample_states`` and distinct-state counts."""
    L = table.levels
    pre = store.pre_latents.astype(np.float64)
    samples = np.atleast_2d(np.asarray(sample_states, dtype=np.float64))
    per_state = np.zeros((len(samples), L), dtype=np.int64)
    for i, s in enumerate(samples):
        lv = table.match_level(pre, s)
        counts = np.bincount(np.minimum(lv, L + 1), minlength=L + 2)[1:L + 1]
        per_state[i] = np.cumsum(counts)
    branching = per_state.mean(axis=0) if len(samples) else np.zeros(L)

    interleaved = np.empty((2 * len(store), store.m), dtype=np.float32)
    interleaved[0::2] = store.pre_latents
    interleaved[1::2] = store.post_latents
    # exact duplicates never open a new group, so drop them up front
    _, first = np.unique(interleaved, axis=0, return_index=True)
    latents = interleaved[np.sort(first)].astype(np.float64)

    distinct = np.zeros(L, dtype=np.int64)
    cache: dict[bytes, int] = {}
    for level in range(1, L + 1):
        thr = table.row(level)
        key = thr.tobytes()
        if key not in cache:
            cache[key] = _greedy_groups(latents, thr)
        distinct[level - 1] = cache[key]
    return SearchDiagnostics(np.arange(1, L + 1), branching, distinct, per_state)


def _greedy_groups(latents: np.ndarray, thr: np.ndarray) -> int:
    reps = np.empty_like(latents)
    n = 0
    for x in latents:
        if n and np.any(np.all(np.abs(reps[:n] - x) <= thr, axis=1)):
            continue
        reps[n] = x
        n += 1
    return n
