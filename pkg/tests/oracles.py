"""Independent reference implementations used only by the tests."""

from collections import deque

import numpy as np

from openended import abstraction as A, memory
from openended.abstraction import same_state
from openended.planner import successors
from openended.sim import PushAction


def substep_sweep(centers, radii, waypoints, effector_radius, bounds_fn, substeps=1000,
                  clamp_each_substep=False):
    """Integrate an effector sweep in small steps.

    At every sub-position, an overlapping object lying ahead of the effector
    (along the motion) is slid along the motion until the discs are tangent.
    """
    centers = [np.array(c, dtype=np.float64) for c in centers]
    pts = np.asarray(waypoints, dtype=np.float64)
    for a, b in zip(pts[:-1], pts[1:]):
        seg = b - a
        length = np.linalg.norm(seg)
        if length == 0:
            continue
        u = seg / length
        for k in range(substeps + 1):
            p = a + seg * (k / substeps)
            for i, r in enumerate(radii):
                R = effector_radius + r
                rel = centers[i] - p
                if rel @ rel >= R * R or rel @ u < 0:
                    continue
                perp = rel @ np.array([-u[1], u[0]])
                ahead = np.sqrt(R * R - perp * perp)
                centers[i] = centers[i] + (ahead - rel @ u) * u
                if clamp_each_substep:
                    centers[i] = _clamp(centers[i], bounds_fn(r))
        centers = [_clamp(c, bounds_fn(r)) for c, r in zip(centers, radii)]
    return centers


def _clamp(c, bounds):
    xmin, xmax, ymin, ymax = bounds
    return np.array([min(max(c[0], xmin), xmax), min(max(c[1], ymin), ymax)])


def bfs_plan_length(current, goal, store, table, level, max_depth):
    """Shortest plan length by breadth-first search over states, or None.

    States are deduplicated by exact equality of their latent bytes.
    """
    start = np.asarray(current, dtype=np.float32)
    seen = {start.tobytes()}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if same_state(state, goal, level, table):
            return depth
        if depth == max_depth:
            continue
        for _, post in successors(state, level, store, table):
            key = np.asarray(post, dtype=np.float32).tobytes()
            if key not in seen:
                seen.add(key)
                frontier.append((post, depth + 1))
    return None


def dense_top_subspace(images, m):
    X = np.stack([np.asarray(im, dtype=np.float64).reshape(-1) for im in images])
    Xc = X - X.mean(axis=0)
    w, v = np.linalg.eigh(Xc.T @ Xc / len(X))
    return v[:, np.argsort(w)[::-1][:m]].T, np.sort(w)[::-1]


def principal_angles(A, B):
    """Principal angles (radians) between the row spaces of A and B."""
    qa, _ = np.linalg.qr(np.asarray(A).T)
    qb, _ = np.linalg.qr(np.asarray(B).T)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def synthetic_store(pre, post):
    """Encoded store whose latents are given directly."""
    pre = np.asarray(pre, dtype=np.float32)
    post = np.asarray(post, dtype=np.float32)
    store = memory.TripletStore((1, 1))
    for i in range(len(pre)):
        memory.record(store, np.zeros((1, 1)), PushAction(((0.0, 0.0), (0.001 * i, 0.0))),
                      np.zeros((1, 1)))
    store.pre_latents, store.post_latents = pre, post
    store.encoder_fingerprint = bytes(32)
    return store


def random_instance(rng, T=None, m=None, grid=4):
    """Latents on a coarse grid so exact revisits (graph cycles) are common."""
    T = T or int(rng.integers(1, 201))
    m = m or int(rng.integers(1, 4))
    pre = rng.integers(0, grid, size=(T, m)).astype(np.float32)
    noise = rng.random() < 0.5
    post = rng.integers(0, grid, size=(T, m)).astype(np.float32)
    if noise:
        pre += rng.normal(scale=0.05, size=pre.shape).astype(np.float32)
    L = int(rng.choice([2, 5, 20]))
    store = synthetic_store(pre, post)
    table = A.thresholds_from_store(store, L)
    return store, table
