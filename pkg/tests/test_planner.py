import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openended import abstraction as A
from openended.planner import (PlanningGraph, compute_max_depth, diagnostics,
                               execute_symbolically, plan, successors)

from oracles import bfs_plan_length, random_instance, synthetic_store


def test_max_depth_from_budget():
    assert compute_max_depth(4000) == 4
    assert compute_max_depth(0) == 0
    assert compute_max_depth(999) == 0
    assert compute_max_depth(10_000) == 10
    with pytest.raises(ValueError):
        compute_max_depth(-1)


def test_successors_empty_when_far():
    store = synthetic_store([[0.0], [1.0]], [[0.5], [1.5]])
    table = A.thresholds_from_store(store, 3)
    assert successors([100.0], 1, store, table) == []


def test_successors_exact_match_single():
    pre = np.arange(10, dtype=np.float32)[:, None] * 10
    post = pre + 1
    store = synthetic_store(pre, post)
    table = A.thresholds_from_store(store, 4)  # every threshold is exactly 1
    out = successors(pre[5], 1, store, table)
    assert len(out) == 1
    assert out[0][0] == store.actions[5]
    assert np.array_equal(out[0][1], post[5])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_successor_sets_nested_across_levels(seed):
    rng = np.random.default_rng(seed)
    store, table = random_instance(rng)
    state = store.pre_latents[rng.integers(len(store))] + rng.normal(scale=0.3, size=store.m)
    prev = set()
    for lv in range(1, table.levels + 1):
        cur = {a.waypoints for a, _ in successors(state, lv, store, table)}
        assert prev <= cur
        prev = cur


def test_zero_length_plan_when_already_there():
    store = synthetic_store([[0.0]], [[1.0]])
    table = A.thresholds_from_store(store, 3)
    p = plan([5.0], [5.0], store, table, max_depth=3)
    assert p is not None and len(p) == 0 and p.level == 1


def with_calibration(pre, post, tiny=0.01):
    """Append a far-away triplet with a tiny change so level-1 thresholds are tiny."""
    pre = np.vstack([pre, np.full((1, np.shape(pre)[1]), 1000.0)])
    post = np.vstack([post, np.full((1, np.shape(post)[1]), 1000.0 + tiny)])
    return synthetic_store(pre, post)


def test_one_step_chain():
    store = with_calibration([[0.0, 0.0]], [[3.0, 1.0]])
    table = A.thresholds_from_store(store, 5)
    p = plan([0.0, 0.0], [3.0, 1.0], store, table, max_depth=1)
    assert p is not None and len(p) == 1 and p.level == 1
    assert p.actions[0] == store.actions[0]


def test_depth_zero_cannot_act():
    store = with_calibration([[0.0]], [[1.0]])
    table = A.thresholds_from_store(store, 3)
    assert plan([0.0], [1.5], store, table, max_depth=0) is None
    assert len(plan([0.0], [1.5], store, table, max_depth=1)) == 1


def test_unreachable_goal_returns_none():
    store = synthetic_store([[0.0], [1.0]], [[1.0], [2.0]])
    table = A.thresholds_from_store(store, 3)
    assert plan([0.0], [50.0], store, table, max_depth=10) is None


def test_chain_needs_exact_depth():
    pre = np.arange(5, dtype=np.float32)[:, None] * 10
    store = with_calibration(pre, pre + 10)
    table = A.thresholds_from_store(store, 2)
    # level 1 demands exact hand-offs: five steps; only level 2 allows shortcuts
    assert plan([0.0], [50.0], store, table, max_depth=4).level == 2
    p = plan([0.0], [50.0], store, table, max_depth=5)
    assert p.level == 1 and list(p.triplets) == [0, 1, 2, 3, 4]


def check_instance(rng, heuristic):
    store, table = random_instance(rng)
    graph = PlanningGraph(store, table)
    m = store.m
    if rng.random() < 0.5:
        current = store.pre_latents[rng.integers(len(store))].copy()
    else:
        current = rng.integers(0, 4, size=m).astype(np.float32)
    goal = store.post_latents[rng.integers(len(store))] + rng.normal(scale=0.1, size=m)
    depth = int(rng.integers(0, 5))
    p = plan(current, goal, store, table, depth, heuristic=heuristic, graph=graph)
    oracle = [bfs_plan_length(current, goal, store, table, lv, depth)
              for lv in range(1, table.levels + 1)]
    first = next((i + 1 for i, r in enumerate(oracle) if r is not None), None)
    if first is None:
        assert p is None
        return
    assert p is not None
    assert p.level == first
    assert len(p) <= depth
    end = execute_symbolically(current, p, store, table)
    assert A.same_state(end, goal, p.level, table)
    if heuristic == "zero":
        assert len(p) == oracle[first - 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["zero", "manhattan"]))
def test_plan_agrees_with_bfs_oracle(seed, heuristic):
    check_instance(np.random.default_rng(seed), heuristic)


def test_plan_is_deterministic(rng):
    store, table = random_instance(rng, T=150, m=2)
    goal = store.post_latents[3]
    a = plan(store.pre_latents[0], goal, store, table, 4)
    b = plan(store.pre_latents[0], goal, store, table, 4)
    assert (a is None) == (b is None)
    if a is not None:
        assert a.triplets == b.triplets and a.level == b.level


def test_stride_skips_levels():
    pre = np.array([[0.0], [10.0]], dtype=np.float32)
    post = np.array([[0.5], [20.0]], dtype=np.float32)
    store = synthetic_store(pre, post)
    table = A.thresholds_from_store(store, 11)
    p1 = plan([0.0], [20.0], store, table, 1, stride=1)
    p3 = plan([0.0], [20.0], store, table, 1, stride=3)
    assert p1 is not None and p3 is not None
    assert (p3.level - 1) % 3 == 0 and p3.level >= p1.level


# Diagnostics


def test_branching_nondecreasing_per_state(rng):
    store, table = random_instance(rng, T=120, m=3)
    samples = store.pre_latents[:15] + rng.normal(scale=0.2, size=(15, 3))
    diag = diagnostics(store, table, samples)
    assert np.all(np.diff(diag.per_state_branching, axis=1) >= 0)
    assert np.all(np.diff(diag.branching) >= 0)
    assert diag.branching[-1] <= len(store)


def test_branching_equals_successor_count(rng):
    store, table = random_instance(rng, T=60, m=2)
    s = store.pre_latents[:4]
    diag = diagnostics(store, table, s)
    for lv in (1, table.levels // 2 + 1, table.levels):
        expect = np.mean([len(successors(x, lv, store, table)) for x in s])
        assert diag.branching[lv - 1] == pytest.approx(expect)


def test_distinct_states_at_level_one_well_separated():
    # every triplet changes one latent by a little and the other by a lot, so
    # the per-latent minima (level 1) are far below every pairwise gap
    T = 20
    i = np.arange(T, dtype=np.float32)
    pre = np.stack([i * 100, i * 100], axis=1)
    big, small = 10 + i, 0.5 + 0.01 * i
    post = pre + np.where(i[:, None] % 2 == 0, np.stack([big, small], 1), np.stack([small, big], 1))
    store = synthetic_store(pre, post)
    table = A.thresholds_from_store(store, 10)
    diag = diagnostics(store, table, pre[:2])
    assert diag.distinct_states[0] == 2 * T


def test_distinct_states_collapse_at_top_level():
    pre = np.array([[0.0], [1.0], [2.0]], dtype=np.float32)
    post = np.array([[5.0], [1.5], [2.2]], dtype=np.float32)  # max diff 5 > any pairwise gap
    store = synthetic_store(pre, post)
    table = A.thresholds_from_store(store, 4)
    diag = diagnostics(store, table, pre)
    assert diag.distinct_states[-1] == 1
    assert diag.distinct_states[0] > 1
