"""Scripted demonstrator standing in for a human teleoperator.

The expert sees ground-truth distance and bearing to the leader while the
recorded observation stream is the noisy UWB one; the learner only ever gets
the latter.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset, DemoSample
from .sim import (
    OMEGA_MAX,
    V_MAX,
    AnchorConfig,
    NoiseSpec,
    Pose2D,
    RandomWaypoints,
    Scenario,
    Twist,
    distance_bearing,
    leader_position,
    scenario_name,
    start_pose,
    step_unicycle,
    uwb_observe,
)

logger = logging.getLogger(__name__)

DEMO_DISTANCE_RANGE = (1.0, 3.4)


class DemonstrationOutOfRange(RuntimeError):
    def __init__(self, step: int, t: float, distance: float):
        self.step, self.t, self.distance = step, t, distance
        lo, hi = DEMO_DISTANCE_RANGE
        super().__init__(
            f"leader distance {distance:.3f} m at step {step} (t={t:.2f} s) outside [{lo}, {hi}] m"
        )


@dataclass(frozen=True)
class ExpertGains:
    k_v: float = 1.2
    k_w: float = 2.0
    d_nom: float = 2.0
    smoothing_tau: float = 0.4
    v_max: float = V_MAX
    omega_max: float = OMEGA_MAX

    def __post_init__(self):
        if min(self.k_v, self.k_w, self.smoothing_tau, self.v_max, self.omega_max) <= 0:
            raise ValueError("expert gains must be positive")
        if not 1.0 <= self.d_nom <= 3.4:
            raise ValueError("d_nom must lie in [1.0, 3.4] m")


def expert_policy(distance: float, bearing: float, gains: ExpertGains, prev_cmd: Twist, dt: float) -> Twist:
    """Proportional follow law passed through a first-order low-pass filter."""
    if distance <= 0 or dt <= 0:
        raise ValueError("distance and dt must be positive")
    v_raw = min(max(gains.k_v * (distance - gains.d_nom), 0.0), gains.v_max)
    w_raw = min(max(gains.k_w * bearing, -gains.omega_max), gains.omega_max)
    alpha = dt / (gains.smoothing_tau + dt)
    return Twist(prev_cmd.v + alpha * (v_raw - prev_cmd.v), prev_cmd.omega + alpha * (w_raw - prev_cmd.omega))


class ExpertController:
    """Stateful wrapper so the expert can drive the closed-loop harness."""

    name = "expert"

    def __init__(self, gains: ExpertGains = ExpertGains()):
        self.gains = gains
        self.reset()

    def reset(self):
        self._prev = Twist()

    def command(self, distance: float, bearing: float, dt: float) -> Twist:
        self._prev = expert_policy(distance, bearing, self.gains, self._prev, dt)
        return self._prev


def record_demonstration(
    scenario: Scenario | None = None,
    gains: ExpertGains = ExpertGains(),
    anchors: AnchorConfig = AnchorConfig(),
    noise: NoiseSpec = NoiseSpec(seed=7),
    rate_hz: float = 50.0,
    duration: float = 110.0,
    check_range: bool = True,
) -> Dataset:
    """Drive the expert behind the leader and log (UWB observation, command) pairs.

    Sample ``k`` pairs the observation taken at ``t = k / rate_hz`` with the
    command the expert issues at that instant. The follower starts ``d_nom``
    behind the leader, facing it.
    """
    if rate_hz <= 0 or duration <= 0:
        raise ValueError("rate_hz and duration must be positive")
    if scenario is None:
        scenario = RandomWaypoints(seed=noise.seed, duration=duration)
    if scenario.duration < duration:
        raise ValueError(f"scenario lasts {scenario.duration} s, shorter than the requested {duration} s")
    n = int(round(duration * rate_hz))
    dt = 1.0 / rate_hz
    rng = noise.rng()
    start = pose = start_pose(scenario, gains.d_nom)
    prev = Twist()
    samples = []
    distances = np.empty(n)
    for k in range(n):
        t = k * dt
        leader = leader_position(scenario, t)
        d, bearing = distance_bearing(pose, leader)
        distances[k] = d
        if check_range and not DEMO_DISTANCE_RANGE[0] <= d <= DEMO_DISTANCE_RANGE[1]:
            logger.error("demonstration rejected: distance %.3f m at step %d", d, k)
            raise DemonstrationOutOfRange(k, t, d)
        obs = uwb_observe(pose, leader, anchors, noise, rng, t=t)
        prev = expert_policy(d, bearing, gains, prev, dt)
        samples.append(DemoSample(obs, prev))
        pose = step_unicycle(pose, prev, dt)
    meta = {
        "seed": noise.seed,
        "scenario": scenario_name(scenario),
        "scenario_params": _scenario_params(scenario),
        "gains": asdict(gains),
        "anchors": asdict(anchors),
        "noise": asdict(noise),
        "start_pose": [start.x, start.y, start.theta],
        "distance_min": float(distances.min()) if n else math.nan,
        "distance_max": float(distances.max()) if n else math.nan,
        "distance_mean": float(distances.mean()) if n else math.nan,
    }
    # JSON-normalized so the sidecar round-trip compares equal
    return Dataset(tuple(samples), rate_hz, json.loads(json.dumps(meta)))


def replay_commands(start: Pose2D, commands, dt: float):
    """Open-loop integration of a command sequence; returns the visited poses."""
    poses = [start]
    for cmd in commands:
        poses.append(step_unicycle(poses[-1], cmd, dt))
    return poses


def _scenario_params(scenario: Scenario) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(scenario).items() if not k.startswith("_")}
