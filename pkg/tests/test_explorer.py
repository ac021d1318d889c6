import numpy as np
import pytest
from scipy import stats

from openended.explorer import ExplorationMode, propose_action


def test_round1_two_waypoints_reproducible(geometry):
    a = propose_action(np.random.default_rng(7), "round1", geometry)
    b = propose_action(np.random.default_rng(7), ExplorationMode.ROUND1, geometry)
    assert a == b
    assert len(a.waypoints) == 2
    for x, y in a.waypoints:
        assert 0 <= x <= geometry.width and 0 <= y <= geometry.reach_depth


def test_seed_determinism_of_streams(geometry):
    def stream(seed):
        rng = np.random.default_rng(seed)
        return [propose_action(rng, "round2", geometry) for _ in range(50)]
    assert stream(3) == stream(3)
    assert stream(3) != stream(4)


@pytest.fixture(scope="module")
def round2_draws():
    from openended.sim import TableGeometry
    g = TableGeometry()
    rng = np.random.default_rng(2024)
    return g, [propose_action(rng, "round2", g) for _ in range(10_000)]


def test_round2_segment_count_uniform(round2_draws):
    _, actions = round2_draws
    counts = np.bincount([a.segments for a in actions], minlength=11)[1:]
    assert counts.sum() == 10_000
    assert stats.chisquare(counts).pvalue > 0.01


def test_waypoints_avoid_shelf(round2_draws):
    g, actions = round2_draws
    pts = np.concatenate([a.as_array() for a in actions])
    assert np.all(pts[:, 1] <= g.reach_depth)
    assert np.all((pts >= 0) & (pts[:, :1] <= g.width))


def test_waypoint_coverage_uniform(geometry):
    rng = np.random.default_rng(99)
    pts = np.array([propose_action(rng, "round1", geometry).waypoints[0] for _ in range(10_000)])
    assert stats.kstest(pts[:, 0], stats.uniform(0, geometry.width).cdf).pvalue > 0.01
    assert stats.kstest(pts[:, 1], stats.uniform(0, geometry.reach_depth).cdf).pvalue > 0.01


def test_waypoints_are_float32_exact(geometry, rng):
    a = propose_action(rng, "round2", geometry)
    arr = a.as_array()
    assert np.array_equal(arr.astype(np.float32).astype(np.float64), arr)


def test_unknown_mode_rejected(geometry, rng):
    with pytest.raises(ValueError):
        propose_action(rng, "round3", geometry)
