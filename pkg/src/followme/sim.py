"""Planar world model: follower kinematics, leader paths and the two-anchor UWB sensor.

Frames: world x/y in meters, headings in radians. The follower body frame has
+x pointing forward and +y to the left; anchor offsets are expressed in it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

V_MAX = 1.2
OMEGA_MAX = 1.5


class DegenerateGeometry(ValueError):
    """Raised when two points that must be distinct coincide (or nearly so)."""


def normalize_angle(phi: float) -> float:
    """Wrap ``phi`` into (-pi, pi]."""
    if not math.isfinite(phi):
        raise ValueError(f"cannot normalize non-finite angle {phi!r}")
    wrapped = math.remainder(phi, 2.0 * math.pi)  # in [-pi, pi]
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))


@dataclass(frozen=True)
class Twist:
    """Velocity command: forward speed ``v`` (m/s) and yaw rate ``omega`` (rad/s)."""

    v: float = 0.0
    omega: float = 0.0

    def clamped(self, v_max: float = V_MAX, omega_max: float = OMEGA_MAX) -> "Twist":
        return Twist(min(max(self.v, 0.0), v_max), min(max(self.omega, -omega_max), omega_max))

    def is_valid(self, v_max: float = V_MAX, omega_max: float = OMEGA_MAX) -> bool:
        return 0.0 <= self.v <= v_max and abs(self.omega) <= omega_max


@dataclass(frozen=True)
class AnchorConfig:
    anchor1: Tuple[float, float] = (0.0, 0.3)
    anchor2: Tuple[float, float] = (0.0, -0.3)
    min_valid_range: float = 0.05

    def __post_init__(self):
        a1 = tuple(float(c) for c in self.anchor1)
        a2 = tuple(float(c) for c in self.anchor2)
        if not all(math.isfinite(c) for c in a1 + a2):
            raise ValueError("anchor coordinates must be finite")
        if a1 == a2:
            raise ValueError("anchor1 and anchor2 must differ")
        object.__setattr__(self, "anchor1", a1)
        object.__setattr__(self, "anchor2", a2)

    @property
    def anchors(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (self.anchor1, self.anchor2)


@dataclass(frozen=True)
class NoiseSpec:
    sigma_range: float = 0.05
    sigma_angle: float = 0.035
    seed: int = 0

    def __post_init__(self):
        if self.sigma_range < 0 or self.sigma_angle < 0:
            raise ValueError("noise standard deviations must be >= 0")

    @classmethod
    def noiseless(cls, seed: int = 0) -> "NoiseSpec":
        return cls(0.0, 0.0, seed)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class UwbObservation:
    t: float
    r1: float
    r2: float
    a1: float
    a2: float


def step_unicycle(pose: Pose2D, cmd: Twist, dt: float) -> Pose2D:
    """Advance ``pose`` by ``dt`` seconds under a constant command (exact arc)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    v, w = cmd.v, cmd.omega
    th = pose.theta
    if abs(w) < 1e-9:
        return Pose2D(pose.x + v * dt * math.cos(th), pose.y + v * dt * math.sin(th), th + w * dt)
    th_new = th + w * dt
    x = pose.x + (v / w) * (math.sin(th_new) - math.sin(th))
    y = pose.y - (v / w) * (math.cos(th_new) - math.cos(th))
    return Pose2D(x, y, th_new)


# -- leader paths -----------------------------------------------------------------


@dataclass(frozen=True)
class FigureEight:
    """Lissajous figure eight ``(A sin(2 pi t/T), B sin(4 pi t/T))``."""

    amplitude_x: float = 3.0
    amplitude_y: float = 1.5
    period: float = 40.0
    duration: float = 80.0

    def position(self, t: float) -> Tuple[float, float]:
        s = 2.0 * math.pi * t / self.period
        return self.amplitude_x * math.sin(s), self.amplitude_y * math.sin(2.0 * s)

    def max_speed(self) -> float:
        w = 2.0 * math.pi / self.period
        # both velocity components peak together at t = 0
        return math.hypot(self.amplitude_x * w, 2.0 * self.amplitude_y * w)


@dataclass(frozen=True)
class Square:
    """Counter-clockwise square starting at the origin along +x."""

    side: float = 4.0
    speed: float = 0.5
    duration: float = 64.0

    def position(self, t: float) -> Tuple[float, float]:
        s = (self.speed * t) % (4.0 * self.side)
        leg, u = divmod(s, self.side)
        leg = int(leg)
        if leg == 0:
            return u, 0.0
        if leg == 1:
            return self.side, u
        if leg == 2:
            return self.side - u, self.side
        return 0.0, self.side - u

    def max_speed(self) -> float:
        return self.speed


@dataclass(frozen=True)
class Line:
    speed: float = 0.4
    duration: float = 60.0

    def position(self, t: float) -> Tuple[float, float]:
        return self.speed * t, 0.0

    def max_speed(self) -> float:
        return self.speed


@dataclass(frozen=True)
class RandomWaypoints:
    """Seeded random walk of straight legs, bounded turns and occasional stops.

    The leader walks legs of random length at a random speed; each new heading
    deviates from the previous one by at most ``max_turn`` so the follower never
    faces a reversal, and headings are biased back toward the origin once the
    leader leaves ``bounds``. After a leg the leader pauses with probability
    ``stop_probability``.
    """

    seed: int = 7
    bounds: float = 15.0
    speed_range: Tuple[float, float] = (0.2, 1.0)
    duration: float = 110.0
    leg_range: Tuple[float, float] = (2.0, 6.0)
    max_turn: float = math.pi / 2
    stop_probability: float = 0.3
    stop_range: Tuple[float, float] = (1.0, 3.0)
    _knots: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "speed_range", tuple(self.speed_range))
        object.__setattr__(self, "leg_range", tuple(self.leg_range))
        object.__setattr__(self, "stop_range", tuple(self.stop_range))
        object.__setattr__(self, "_knots", self._build_knots())

    def _build_knots(self):
        rng = np.random.default_rng(self.seed)
        t, x, y, heading = 0.0, 0.0, 0.0, 0.0
        times, xs, ys = [0.0], [0.0], [0.0]
        first = True
        while t <= self.duration:
            if not first:
                turn = rng.uniform(-self.max_turn, self.max_turn)
                if math.hypot(x, y) > self.bounds:
                    home = math.atan2(-y, -x)
                    delta = normalize_angle(home - heading)
                    turn = math.copysign(min(abs(delta), self.max_turn), delta)
                heading = normalize_angle(heading + turn)
            first = False
            length = rng.uniform(*self.leg_range)
            speed = rng.uniform(*self.speed_range)
            x += length * math.cos(heading)
            y += length * math.sin(heading)
            t += length / speed
            times.append(t)
            xs.append(x)
            ys.append(y)
            if rng.uniform() < self.stop_probability:
                t += rng.uniform(*self.stop_range)
                times.append(t)
                xs.append(x)
                ys.append(y)
        return (np.array(times), np.array(xs), np.array(ys))

    def position(self, t: float) -> Tuple[float, float]:
        times, xs, ys = self._knots
        return float(np.interp(t, times, xs)), float(np.interp(t, times, ys))

    def max_speed(self) -> float:
        return self.speed_range[1]


Scenario = Union[FigureEight, Square, Line, RandomWaypoints]

SCENARIO_PRESETS = {
    "eight": FigureEight,
    "square": Square,
    "line": Line,
    "random": RandomWaypoints,
}


def make_scenario(name: str, **overrides) -> Scenario:
    """Build a named preset (``eight``, ``square``, ``line``, ``random``)."""
    try:
        cls = SCENARIO_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIO_PRESETS)}") from None
    return cls(**overrides)


def scenario_name(scenario: Scenario) -> str:
    for name, cls in SCENARIO_PRESETS.items():
        if isinstance(scenario, cls):
            return name
    raise TypeError(f"not a scenario: {scenario!r}")


def leader_position(scenario: Scenario, t: float) -> Tuple[float, float]:
    if not 0.0 <= t <= scenario.duration:
        raise ValueError(f"t={t} outside [0, {scenario.duration}]")
    return scenario.position(t)


def leader_heading(scenario: Scenario, t: float = 0.0, h: float = 1e-3) -> float:
    """Direction of travel at ``t`` estimated by a forward difference."""
    x0, y0 = scenario.position(t)
    x1, y1 = scenario.position(t + h)
    return math.atan2(y1 - y0, x1 - x0)


def start_pose(scenario: Scenario, distance: float) -> Pose2D:
    """Follower pose ``distance`` meters behind the leader, facing it."""
    x, y = scenario.position(0.0)
    heading = leader_heading(scenario)
    return Pose2D(x - distance * math.cos(heading), y - distance * math.sin(heading), heading)


# -- UWB sensor -------------------------------------------------------------------


def _rotate(x: float, y: float, theta: float) -> Tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    return c * x - s * y, s * x + c * y


def anchor_world(follower: Pose2D, anchor: Sequence[float]) -> Tuple[float, float]:
    dx, dy = _rotate(anchor[0], anchor[1], follower.theta)
    return follower.x + dx, follower.y + dy


def to_body(follower: Pose2D, point: Sequence[float]) -> Tuple[float, float]:
    return _rotate(point[0] - follower.x, point[1] - follower.y, -follower.theta)


def uwb_observe(
    follower: Pose2D,
    leader_xy: Sequence[float],
    anchors: AnchorConfig,
    noise: NoiseSpec,
    rng: np.random.Generator | None,
    t: float = 0.0,
) -> UwbObservation:
    """Range and body-frame angle of arrival from each anchor to the leader tag.

    Noise draws consume four normals from ``rng`` in the order r1, r2, a1, a2.
    ``rng`` may be None only when both noise sigmas are zero.
    """
    lx, ly = to_body(follower, leader_xy)
    values = []
    for ax, ay in anchors.anchors:
        dx, dy = lx - ax, ly - ay
        r = math.hypot(dx, dy)
        if r < anchors.min_valid_range:
            raise DegenerateGeometry(f"leader within {anchors.min_valid_range} m of anchor ({ax}, {ay})")
        values.append((r, math.atan2(dy, dx)))
    (r1, a1), (r2, a2) = values
    if noise.sigma_range > 0 or noise.sigma_angle > 0:
        e = rng.standard_normal(4)
        floor = anchors.min_valid_range
        r1 = max(r1 + noise.sigma_range * e[0], floor)
        r2 = max(r2 + noise.sigma_range * e[1], floor)
        a1 = a1 + noise.sigma_angle * e[2]
        a2 = a2 + noise.sigma_angle * e[3]
    return UwbObservation(float(t), r1, r2, normalize_angle(a1), normalize_angle(a2))


def reconstruct_leader(obs: UwbObservation, anchors: AnchorConfig) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Body-frame leader position recovered independently from each anchor."""
    out = []
    for (ax, ay), r, a in zip(anchors.anchors, (obs.r1, obs.r2), (obs.a1, obs.a2)):
        out.append((ax + r * math.cos(a), ay + r * math.sin(a)))
    return out[0], out[1]


def distance_bearing(follower: Pose2D, leader_xy: Sequence[float]) -> Tuple[float, float]:
    """Ground-truth distance from the follower origin and bearing in its body frame."""
    bx, by = to_body(follower, leader_xy)
    d = math.hypot(bx, by)
    if d == 0.0:
        raise DegenerateGeometry("leader coincides with follower")
    return d, math.atan2(by, bx)


def estimate_distance_bearing(obs: UwbObservation, anchors: AnchorConfig) -> Tuple[float, float]:
    """Distance and bearing from the follower origin, averaging both anchor fixes."""
    (x1, y1), (x2, y2) = reconstruct_leader(obs, anchors)
    x, y = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
    d = math.hypot(x, y)
    if d == 0.0:
        raise DegenerateGeometry("estimated leader position coincides with follower")
    return d, math.atan2(y, x)
