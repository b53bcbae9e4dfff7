"""Offline MSE study, closed-loop follow runs and tracking/smoothness metrics."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import Dataset, InputConfig, split_dataset
from .models.base import TrainingDiverged
from .models.policy import policy_predict
from .models.training import TrainConfig, train_model
from .sim import (
    OMEGA_MAX,
    V_MAX,
    AnchorConfig,
    DegenerateGeometry,
    NoiseSpec,
    Pose2D,
    Scenario,
    Twist,
    distance_bearing,
    estimate_distance_bearing,
    leader_position,
    normalize_angle,
    start_pose,
    step_unicycle,
    to_body,
    uwb_observe,
)

logger = logging.getLogger(__name__)

COLLISION_DISTANCE = 0.3
TRACE_HEADER = ("t", "fx", "fy", "ftheta", "lx", "ly", "v", "omega", "distance", "offset")
DEFAULT_GRID = (
    ("mlp", "ranges"),
    ("mlp", "angles"),
    ("mlp", "all"),
    ("lstm", "ranges"),
    ("lstm", "angles"),
    ("lstm", "all"),
    ("svr", "all"),
)


def angular_offset(follower: Pose2D, leader_xy) -> float:
    """Bearing of the leader in the follower frame; 0 when pointing at it."""
    bx, by = to_body(follower, leader_xy)
    if bx == 0.0 and by == 0.0:
        raise DegenerateGeometry("leader coincides with follower")
    return normalize_angle(math.atan2(by, bx))


# -- ground-truth controllers -------------------------------------------------------


def baseline_policy(distance: float, bearing: float, d_nom: float = 2.0, k_v: float = 2.5, k_w: float = 4.0) -> Twist:
    """Stiff, unfiltered proportional follow law used as the comparison baseline."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return Twist(k_v * (distance - d_nom), k_w * bearing).clamped(V_MAX, OMEGA_MAX)


class BaselineController:
    """Baseline driven by distance/bearing fused from the noisy UWB fixes."""

    name = "baseline"
    observes = "uwb"

    def __init__(self, d_nom: float = 2.0, k_v: float = 2.5, k_w: float = 4.0):
        self.d_nom, self.k_v, self.k_w = d_nom, k_v, k_w

    def reset(self):
        pass

    def command(self, distance: float, bearing: float, dt: float) -> Twist:
        return baseline_policy(distance, bearing, self.d_nom, self.k_v, self.k_w)


# -- closed loop --------------------------------------------------------------------


@dataclass
class ClosedLoopTrace:
    """Per-step log at a fixed rate; arrays share one length."""

    t: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    ftheta: np.ndarray
    lx: np.ndarray
    ly: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    distance: np.ndarray
    offset: np.ndarray
    rate_hz: float = 50.0
    collided: bool = False
    collision_time: Optional[float] = None

    def __len__(self) -> int:
        return len(self.t)

    def columns(self) -> List[np.ndarray]:
        return [getattr(self, name) for name in TRACE_HEADER]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(TRACE_HEADER) + "\n")
        for row in zip(*self.columns()):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()


def _is_controller(model) -> bool:
    return hasattr(model, "command") and not hasattr(model, "predict")


def _controller_sees_uwb(model) -> bool:
    return getattr(model, "observes", "truth") == "uwb"


def closed_loop_run(
    model,
    cfg: InputConfig | str | None,
    scenario: Scenario,
    anchors: AnchorConfig = AnchorConfig(),
    noise: NoiseSpec = NoiseSpec(),
    nominal_d: float = 2.0,
    rate_hz: float = 50.0,
) -> ClosedLoopTrace:
    """Simulate the follower under ``model`` for the scenario's duration.

    ``model`` is either a fitted policy (fed noisy UWB observations through
    :func:`policy_predict`) or a controller exposing
    ``command(distance, bearing, dt)``. A controller reads ground truth unless
    its ``observes`` attribute is ``"uwb"``, in which case it gets the
    distance/bearing estimate fused from the same noisy observation stream. The follower
    starts ``nominal_d`` behind the leader. A step closer than 0.3 m ends the
    run and sets ``collided``.
    """
    controller = _is_controller(model)
    sees_uwb = controller and _controller_sees_uwb(model)
    if not controller:
        cfg = InputConfig.parse(cfg if cfg is not None else model.inputs)
        if cfg.feature_dim != InputConfig.parse(model.inputs).feature_dim:
            raise ValueError(
                f"model expects {InputConfig.parse(model.inputs).feature_dim} features, inputs={cfg.value!r} gives {cfg.feature_dim}"
            )
    else:
        model.reset()
    dt = 1.0 / rate_hz
    n = int(round(scenario.duration * rate_hz))
    rng = noise.rng()
    pose = start_pose(scenario, nominal_d)
    history = []
    rows = []
    collided, collision_time = False, None
    for k in range(n + 1):
        t = k * dt
        if t > scenario.duration:
            break
        leader = leader_position(scenario, t)
        d, bearing = distance_bearing(pose, leader)
        if d < COLLISION_DISTANCE:
            collided, collision_time = True, t
            logger.warning("collision at t=%.2f s (distance %.3f m); trace truncated", t, d)
            break
        if controller and not sees_uwb:
            cmd = model.command(d, bearing, dt)
        else:
            obs = uwb_observe(pose, leader, anchors, noise, rng, t=t)
            if controller:
                cmd = model.command(*estimate_distance_bearing(obs, anchors), dt)
            else:
                history.append(obs)
                cmd = policy_predict(model, history, cfg)
        rows.append((t, pose.x, pose.y, pose.theta, leader[0], leader[1], cmd.v, cmd.omega, d, bearing))
        pose = step_unicycle(pose, cmd, dt)
    cols = np.array(rows, dtype=float).reshape(-1, len(TRACE_HEADER)).T
    return ClosedLoopTrace(*cols, rate_hz=rate_hz, collided=collided, collision_time=collision_time)


# -- metrics ------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    mean: float
    std: float

    @classmethod
    def of(cls, values) -> "BoxStats":
        x = np.asarray(values, dtype=float)
        if x.size == 0:
            raise ValueError("box statistics of an empty sample")
        q1, med, q3 = np.percentile(x, [25, 50, 75])
        iqr = q3 - q1
        inside = x[(x >= q1 - 1.5 * iqr) & (x <= q3 + 1.5 * iqr)]
        return cls(
            float(x.min()), float(q1), float(med), float(q3), float(x.max()),
            float(inside.min()), float(inside.max()), float(x.mean()), float(x.std()),
        )


@dataclass(frozen=True)
class MetricsReport:
    mae_angle_deg: float
    mean_distance_m: float
    mae_distance_m: float
    speed_stats: BoxStats
    angle_stats: BoxStats

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            d["mae_angle_deg"], d["mean_distance_m"], d["mae_distance_m"],
            BoxStats(**d["speed_stats"]), BoxStats(**d["angle_stats"]),
        )


def compute_metrics(trace: ClosedLoopTrace, nominal_d: float = 2.0) -> MetricsReport:
    """Tracking errors plus box statistics of commanded speed and angle offset (deg).

    Distance MAE is taken against ``nominal_d``.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    offset_deg = np.degrees(trace.offset)
    return MetricsReport(
        mae_angle_deg=float(np.mean(np.abs(offset_deg))),
        mean_distance_m=float(np.mean(trace.distance)),
        mae_distance_m=float(np.mean(np.abs(trace.distance - nominal_d))),
        speed_stats=BoxStats.of(trace.v),
        angle_stats=BoxStats.of(offset_deg),
    )


BOX_HEADER = ("model", "scenario", "metric") + tuple(BoxStats.__dataclass_fields__)


def box_rows(label: str, scenario: str, report: MetricsReport) -> List[tuple]:
    return [
        (label, scenario, "linear_speed", *asdict(report.speed_stats).values()),
        (label, scenario, "angular_offset_deg", *asdict(report.angle_stats).values()),
    ]


def box_csv(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    buf.write(",".join(BOX_HEADER) + "\n")
    for row in rows:
        buf.write(",".join(x if isinstance(x, str) else repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


# -- offline study --------------------------------------------------------------------


@dataclass
class OfflineRow:
    kind: str
    inputs: str
    train_mse: float
    test_mse: float
    train_mse_runs: List[float]
    test_mse_runs: List[float]
    iterations: int
    diverged: bool = False
    error: str = ""

    @property
    def cell(self) -> str:
        return f"{self.kind}_{self.inputs}"


@dataclass
class OfflineReport:
    rows: List[OfflineRow]
    best_models: Dict[str, object] = field(default_factory=dict, repr=False, compare=False)

    def row(self, kind: str, inputs: str) -> OfflineRow:
        inputs = InputConfig.parse(inputs).value
        for r in self.rows:
            if r.kind == kind and r.inputs == inputs:
                return r
        raise KeyError((kind, inputs))

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "inputs", "train_mse", "test_mse", "iterations", "diverged", "error"])
        for r in self.rows:
            w.writerow([r.kind, r.inputs, repr(r.train_mse), repr(r.test_mse), r.iterations, int(r.diverged), r.error])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "OfflineReport":
        return cls([OfflineRow(**r) for r in d["rows"]])


def offline_eval(
    ds: Dataset,
    grid: Sequence[Tuple[str, str]] = DEFAULT_GRID,
    tc: TrainConfig = TrainConfig(),
    train_fraction: float = 0.8,
) -> OfflineReport:
    """Train every (kind, inputs) cell ``tc.iterations`` times and average the MSEs.

    Iteration ``i`` uses seed ``tc.seed + i``. The SVR is deterministic, so it
    is fitted once and its value replicated. A diverging cell is reported with
    ``diverged=True`` instead of aborting the study. The lowest-test-MSE model
    of each cell is kept in ``best_models``.
    """
    train, test = split_dataset(ds, train_fraction, tc.window_len)
    rows, best = [], {}
    for kind, inputs in grid:
        inputs = InputConfig.parse(inputs).value
        tr_runs, te_runs = [], []
        best_model, best_score = None, math.inf
        try:
            for i in range(tc.iterations):
                if kind == "svr" and i > 0:
                    tr_runs.append(tr_runs[0])
                    te_runs.append(te_runs[0])
                    continue
                model, tr, te = train_model(kind, train, test, inputs, tc, seed=tc.seed + i)
                tr_runs.append(tr)
                te_runs.append(te)
                if te < best_score:
                    best_model, best_score = model, te
                logger.info("%s/%s iteration %d: train %.5f test %.5f", kind, inputs, i, tr, te)
        except TrainingDiverged as exc:
            logger.error("%s/%s diverged: %s", kind, inputs, exc)
            rows.append(OfflineRow(kind, inputs, math.nan, math.nan, tr_runs, te_runs, tc.iterations, True, str(exc)))
            continue
        row = OfflineRow(kind, inputs, float(np.mean(tr_runs)), float(np.mean(te_runs)), tr_runs, te_runs, tc.iterations)
        rows.append(row)
        best[row.cell] = best_model
    return OfflineReport(rows, best)
