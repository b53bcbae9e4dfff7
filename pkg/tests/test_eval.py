import json
import math

import numpy as np
import pytest

from followme.dataset import Dataset
from followme.eval import (
    BOX_HEADER,
    DEFAULT_GRID,
    BaselineController,
    BoxStats,
    ClosedLoopTrace,
    MetricsReport,
    OfflineReport,
    angular_offset,
    baseline_policy,
    box_csv,
    box_rows,
    closed_loop_run,
    compute_metrics,
    offline_eval,
)
from followme.expert import ExpertController, record_demonstration
from followme.models import MLPPolicy, TrainConfig
from followme.sim import FigureEight, Line, NoiseSpec, Pose2D


@pytest.mark.parametrize(
    "pose, leader, expected",
    [((0, 0, 0), (3, 0), 0.0), ((0, 0, 0), (0, 3), math.pi / 2), ((0, 0, math.pi), (3, 0), math.pi)],
)
def test_angular_offset(pose, leader, expected):
    assert angular_offset(Pose2D(*pose), leader) == pytest.approx(expected, abs=1e-12)


def test_baseline_examples():
    assert baseline_policy(2.0, 0.0) == baseline_policy(2.0, 0.0).clamped()
    cmd = baseline_policy(2.0, 0.0)
    assert (cmd.v, cmd.omega) == (0.0, 0.0)
    assert baseline_policy(2.5, 0.0).v == 1.2
    assert baseline_policy(2.0, -0.5).omega == -1.5
    with pytest.raises(ValueError):
        baseline_policy(0.0, 0.0)


def null_mlp():
    m = MLPPolicy(hidden=2, epochs=1).fit(np.ones((4, 4)), np.zeros((4, 2)))
    m.params_ = {k: np.zeros_like(v) for k, v in m.params_.items()}
    return m


def test_null_policy_on_line():
    sc = Line(duration=10.0)
    trace = closed_loop_run(null_mlp(), "all", sc, noise=NoiseSpec(seed=1))
    assert len(trace) == 501
    assert np.all(trace.fx == trace.fx[0]) and np.all(trace.fy == trace.fy[0])
    # follower starts 2 m behind; leader walks away at constant speed
    assert trace.distance == pytest.approx(2.0 + sc.speed * trace.t, abs=1e-9)


def test_expert_tracks_figure_eight():
    trace = closed_loop_run(ExpertController(), None, FigureEight(), noise=NoiseSpec(seed=3))
    assert not trace.collided
    assert abs(compute_metrics(trace).mean_distance_m - 2.0) < 0.2


def test_baseline_sees_noise():
    sc = Line(duration=5.0)
    a = closed_loop_run(BaselineController(), None, sc, noise=NoiseSpec(seed=1))
    b = closed_loop_run(BaselineController(), None, sc, noise=NoiseSpec(seed=2))
    c = closed_loop_run(BaselineController(), None, sc, noise=NoiseSpec(seed=1))
    assert not np.array_equal(a.v, b.v)
    assert a.to_csv() == c.to_csv()


def test_dim_mismatch_is_rejected():
    with pytest.raises(ValueError, match="features"):
        closed_loop_run(null_mlp(), "ranges", Line(duration=1.0))


def test_collision_truncates():
    # a controller that drives at the leader at full speed from behind
    class Rammer:
        def reset(self):
            pass

        def command(self, distance, bearing, dt):
            return baseline_policy(distance, bearing, d_nom=0.0)

    trace = closed_loop_run(Rammer(), None, Line(speed=0.2, duration=20.0), noise=NoiseSpec.noiseless())
    assert trace.collided
    assert trace.distance.min() >= 0.3
    assert len(trace) < 1001


def make_trace(distance, offset, v=None):
    n = len(distance)
    z = np.zeros(n)
    v = z if v is None else np.asarray(v, dtype=float)
    return ClosedLoopTrace(np.arange(n) / 50, z, z, z, z, z, v, z, np.asarray(distance, float), np.asarray(offset, float))


def test_metrics_examples():
    m = compute_metrics(make_trace([2.0] * 5, [0.0] * 5))
    assert (m.mae_angle_deg, m.mean_distance_m, m.mae_distance_m) == (0.0, 2.0, 0.0)
    m = compute_metrics(make_trace([1.8, 2.2], [0.0, 0.0]))
    assert m.mean_distance_m == pytest.approx(2.0)
    assert m.mae_distance_m == pytest.approx(0.2)
    m = compute_metrics(make_trace([2.0, 2.0], np.radians([179.0, -179.0])))
    assert m.mae_angle_deg == pytest.approx(179.0)


def test_metrics_independent_recompute():
    rng = np.random.default_rng(0)
    d, off, v = rng.uniform(1, 3, 200), rng.uniform(-1, 1, 200), rng.uniform(0, 1.2, 200)
    m = compute_metrics(make_trace(d, off, v), nominal_d=2.0)
    assert m.mae_angle_deg == pytest.approx(sum(abs(x) for x in off) / 200 * 180 / math.pi)
    assert m.mae_distance_m == pytest.approx(sum(abs(x - 2.0) for x in d) / 200)
    assert m.speed_stats.std == pytest.approx(float(np.std(v)))
    assert m.speed_stats.median == pytest.approx(float(np.median(v)))


def test_box_stats_whiskers():
    s = BoxStats.of([1, 2, 3, 4, 100])
    assert (s.q1, s.median, s.q3) == (2.0, 3.0, 4.0)
    assert s.whisker_high == 4.0
    assert s.max == 100.0
    with pytest.raises(ValueError):
        BoxStats.of([])


def test_metrics_json_round_trip():
    m = compute_metrics(make_trace([1.9, 2.1, 2.3], [0.1, -0.2, 0.0], [0.1, 0.5, 0.3]))
    d = json.loads(m.to_json())
    assert set(d) == {"mae_angle_deg", "mean_distance_m", "mae_distance_m", "speed_stats", "angle_stats"}
    assert MetricsReport.from_dict(d) == m


def test_box_csv_layout():
    m = compute_metrics(make_trace([2.0, 2.1], [0.0, 0.1], [0.2, 0.3]))
    lines = box_csv(box_rows("mlp_all", "line", m)).splitlines()
    assert lines[0] == ",".join(BOX_HEADER)
    assert len(lines) == 3
    assert lines[1].startswith("mlp_all,line,linear_speed,")


@pytest.fixture(scope="module")
def short_demo():
    return record_demonstration(duration=12.0)


def test_offline_eval_default_grid(short_demo):
    tc = TrainConfig(epochs=2, batch_size=64, window_len=20, hidden=4, iterations=2)
    report = offline_eval(short_demo, DEFAULT_GRID, tc)
    assert [(r.kind, r.inputs) for r in report.rows] == list(DEFAULT_GRID)
    assert len(report.rows) == 7
    for r in report.rows:
        assert len(r.test_mse_runs) == 2
        assert r.test_mse == pytest.approx(np.mean(r.test_mse_runs))
    svr = report.row("svr", "all")
    assert svr.test_mse_runs[0] == svr.test_mse_runs[1]
    assert set(report.best_models) == {f"{k}_{i}" for k, i in DEFAULT_GRID}
    again = OfflineReport.from_dict(json.loads(report.to_json()))
    assert again.to_csv() == report.to_csv()


def test_offline_eval_single_iteration(short_demo):
    tc = TrainConfig(epochs=2, window_len=20, hidden=4, iterations=1)
    report = offline_eval(short_demo, [("mlp", "all")], tc)
    row = report.rows[0]
    assert row.test_mse == row.test_mse_runs[0]
    assert row.train_mse == row.train_mse_runs[0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_offline_eval_flags_divergence(short_demo):
    tc = TrainConfig(epochs=5, window_len=20, hidden=4, iterations=1, lr=1e300)
    report = offline_eval(short_demo, [("mlp", "all"), ("svr", "all")], tc)
    assert report.rows[0].diverged
    assert not report.rows[1].diverged


def test_offline_eval_constant_actions():
    n = 400
    ds = Dataset.from_arrays(np.arange(n) / 50, np.random.default_rng(0).normal(2, 0.1, (n, 4)), np.tile([0.5, 0.0], (n, 1)))
    tc = TrainConfig(epochs=30, batch_size=16, window_len=20, hidden=8, iterations=1)
    report = offline_eval(ds, [("mlp", "all"), ("svr", "all")], tc)
    assert all(r.test_mse < 1e-4 for r in report.rows)
