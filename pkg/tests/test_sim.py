import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from followme.sim import (
    AnchorConfig,
    DegenerateGeometry,
    FigureEight,
    Line,
    NoiseSpec,
    Pose2D,
    RandomWaypoints,
    SCENARIO_PRESETS,
    Square,
    Twist,
    distance_bearing,
    estimate_distance_bearing,
    leader_position,
    make_scenario,
    normalize_angle,
    reconstruct_leader,
    start_pose,
    step_unicycle,
    to_body,
    uwb_observe,
)

NOISELESS = NoiseSpec.noiseless()


@pytest.mark.parametrize(
    "phi, expected",
    [(0.0, 0.0), (3 * math.pi, math.pi), (-math.pi, math.pi), (-3.15159, -3.15159 + 2 * math.pi)],
)
def test_normalize_angle_examples(phi, expected):
    assert normalize_angle(phi) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-1e4, 1e4))
def test_normalize_angle_range_and_congruence(phi):
    out = normalize_angle(phi)
    assert -math.pi < out <= math.pi
    k = (phi - out) / (2 * math.pi)
    assert k == pytest.approx(round(k), abs=1e-9)


@pytest.mark.parametrize(
    "pose, cmd, dt, expected",
    [
        ((0, 0, 0), (1, 0), 0.02, (0.02, 0, 0)),
        ((1, 1, 0), (0, math.pi), 1.0, (1, 1, math.pi)),
        ((0, 0, 0), (1, 1), math.pi / 2, (1, 1, math.pi / 2)),
    ],
)
def test_step_unicycle_examples(pose, cmd, dt, expected):
    out = step_unicycle(Pose2D(*pose), Twist(*cmd), dt)
    assert (out.x, out.y, out.theta) == pytest.approx(expected, abs=1e-12)


def test_step_unicycle_small_omega_matches_straight_line():
    pose = Pose2D(0.3, -1.2, 0.7)
    a = step_unicycle(pose, Twist(1.0, 1e-12), 0.02)
    b = step_unicycle(pose, Twist(1.0, 0.0), 0.02)
    assert math.hypot(a.x - b.x, a.y - b.y) < 1e-9


def test_step_unicycle_rejects_bad_dt():
    with pytest.raises(ValueError):
        step_unicycle(Pose2D(0, 0, 0), Twist(), 0.0)


def test_twist_clamp():
    c = Twist(2.0, -3.0).clamped()
    assert (c.v, c.omega) == (1.2, -1.5)
    assert Twist(-0.5, 0.0).clamped().v == 0.0


def test_scenario_examples():
    assert Line(speed=0.8).position(0) == (0, 0)
    assert Line(speed=0.8).position(5) == pytest.approx((4, 0))
    assert FigureEight().position(0) == pytest.approx((0, 0))
    assert Square().position(8) == pytest.approx((4, 0))


@pytest.mark.parametrize("name", sorted(SCENARIO_PRESETS))
def test_leader_speed_bound_at_1khz(name):
    sc = make_scenario(name)
    t = np.arange(0.0, sc.duration, 1e-3)
    xy = np.array([leader_position(sc, ti) for ti in t])
    speed = np.hypot(*np.diff(xy, axis=0).T) / 1e-3
    assert speed.max() <= 1.2 + 1e-9


def test_leader_position_outside_duration():
    with pytest.raises(ValueError):
        leader_position(Line(), -0.1)
    with pytest.raises(ValueError):
        leader_position(Line(), Line().duration + 1)


def test_random_waypoints_is_seeded():
    a, b, c = RandomWaypoints(seed=3), RandomWaypoints(seed=3), RandomWaypoints(seed=4)
    assert a.position(50.0) == b.position(50.0)
    assert a.position(50.0) != c.position(50.0)


def test_start_pose_faces_leader_at_distance():
    sc = FigureEight()
    d, bearing = distance_bearing(start_pose(sc, 2.0), leader_position(sc, 0.0))
    assert d == pytest.approx(2.0)
    assert bearing == pytest.approx(0.0, abs=1e-9)


def test_uwb_examples():
    obs = uwb_observe(Pose2D(0, 0, 0), (2, 0), AnchorConfig(), NOISELESS, None)
    assert obs.r1 == pytest.approx(2.022375, abs=1e-6)
    assert obs.r2 == pytest.approx(2.022375, abs=1e-6)
    assert obs.a1 == pytest.approx(-0.148890, abs=1e-6)
    assert obs.a2 == pytest.approx(0.148890, abs=1e-6)
    # independent oracle
    assert obs.a1 == pytest.approx(math.atan2(-0.3, 2.0), abs=1e-15)

    rotated = uwb_observe(Pose2D(0, 0, math.pi / 2), (0, 2), AnchorConfig(), NOISELESS, None)
    for k in ("r1", "r2", "a1", "a2"):
        assert getattr(rotated, k) == pytest.approx(getattr(obs, k), abs=1e-12)


@settings(max_examples=50)
@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi),
    st.floats(0.5, 6), st.floats(-math.pi, math.pi),
)
def test_uwb_mirror_symmetry(x, y, theta, d, b):
    follower = Pose2D(x, y, theta)
    leader = (x + d * math.cos(theta + b), y + d * math.sin(theta + b))
    mirror = (x + d * math.cos(theta - b), y + d * math.sin(theta - b))
    o = uwb_observe(follower, leader, AnchorConfig(), NOISELESS, None)
    m = uwb_observe(follower, mirror, AnchorConfig(), NOISELESS, None)
    assert (m.r1, m.r2) == pytest.approx((o.r2, o.r1), abs=1e-9)
    if abs(abs(o.a1) - math.pi) > 1e-6 and abs(abs(o.a2) - math.pi) > 1e-6:
        assert (m.a1, m.a2) == pytest.approx((-o.a2, -o.a1), abs=1e-9)


def test_reconstruction_matches_ground_truth():
    rng = np.random.default_rng(0)
    anchors = AnchorConfig()
    for _ in range(200):
        f = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))
        leader = tuple(rng.uniform(-10, 10, 2))
        if min(math.hypot(*np.subtract(to_body(f, leader), a)) for a in anchors.anchors) < 0.1:
            continue
        p1, p2 = reconstruct_leader(uwb_observe(f, leader, anchors, NOISELESS, None), anchors)
        truth = to_body(f, leader)
        assert math.dist(p1, truth) < 1e-9
        assert math.dist(p2, truth) < 1e-9


def test_estimate_matches_truth_without_noise():
    f, leader = Pose2D(1, 2, 0.4), (3.0, 3.5)
    obs = uwb_observe(f, leader, AnchorConfig(), NOISELESS, None)
    assert estimate_distance_bearing(obs, AnchorConfig()) == pytest.approx(distance_bearing(f, leader), abs=1e-12)


def test_degenerate_geometry():
    with pytest.raises(DegenerateGeometry):
        uwb_observe(Pose2D(0, 0, 0), (0.0, 0.3), AnchorConfig(), NOISELESS, None)


def test_noise_is_deterministic_per_seed():
    spec = NoiseSpec(seed=5)
    args = (Pose2D(0, 0, 0), (2.0, 0.5), AnchorConfig(), spec)
    assert uwb_observe(*args, spec.rng()) == uwb_observe(*args, spec.rng())
    other = NoiseSpec(seed=6)
    assert uwb_observe(*args, spec.rng()) != uwb_observe(Pose2D(0, 0, 0), (2.0, 0.5), AnchorConfig(), other, other.rng())


def test_noisy_ranges_stay_positive():
    spec = NoiseSpec(sigma_range=5.0, seed=1)
    rng = spec.rng()
    for _ in range(200):
        o = uwb_observe(Pose2D(0, 0, 0), (0.5, 0.0), AnchorConfig(), spec, rng)
        assert min(o.r1, o.r2) >= AnchorConfig().min_valid_range
        assert -math.pi < o.a1 <= math.pi
