import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from followme.dataset import (
    CSV_HEADER,
    Dataset,
    DemoSample,
    InputConfig,
    InsufficientData,
    ParseError,
    ValidationError,
    dumps_csv,
    make_windows,
    read_csv,
    select_inputs,
    split_dataset,
    write_csv,
)
from followme.sim import Twist, UwbObservation


def synthetic(n, rate=50.0, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / rate
    obs = rng.normal(size=(n, 4))
    act = rng.normal(size=(n, 2))
    return Dataset.from_arrays(t, obs, act, rate)


OBS = UwbObservation(0.0, 2.0, 2.1, 0.1, -0.1)


@pytest.mark.parametrize(
    "cfg, expected",
    [("ranges", [2.0, 2.1]), ("angles", [0.1, -0.1]), ("all", [2.0, 2.1, 0.1, -0.1])],
)
def test_select_inputs(cfg, expected):
    assert select_inputs(OBS, InputConfig.parse(cfg)).tolist() == expected


def test_projection_concatenates():
    both = np.concatenate([select_inputs(OBS, InputConfig.RANGES), select_inputs(OBS, InputConfig.ANGLES)])
    assert np.array_equal(both, select_inputs(OBS, InputConfig.ALL))


def test_input_config_aliases():
    assert InputConfig.parse("RangesAndAngles") is InputConfig.ALL
    assert InputConfig.ALL.feature_dim == 4
    with pytest.raises(ValueError):
        InputConfig.parse("lidar")


@pytest.mark.parametrize("n, expected", [(5500, 5401), (100, 1)])
def test_window_counts(n, expected):
    X, y = make_windows(synthetic(n), InputConfig.ALL, 100)
    assert X.shape == (expected, 100, 4)
    assert y.shape == (expected, 2)


def test_window_insufficient():
    with pytest.raises(InsufficientData):
        make_windows(synthetic(99), InputConfig.ALL, 100)


def test_window_stride_and_targets():
    ds = synthetic(250)
    X, y = make_windows(ds, InputConfig.RANGES, 100, stride=7)
    assert len(X) == (250 - 100) // 7 + 1
    k = 5
    assert np.array_equal(X[k], ds.observations[k * 7 : k * 7 + 100, :2])
    assert np.array_equal(y[k], ds.actions[k * 7 + 99])


def test_window_coverage_stride_one():
    ds = synthetic(300)
    _, y = make_windows(ds, InputConfig.ALL, 100)
    assert np.array_equal(y, ds.actions[99:])


@pytest.mark.parametrize("n, frac, sizes", [(5500, 0.8, (4400, 1100)), (10, 0.5, (5, 5))])
def test_split(n, frac, sizes):
    ds = synthetic(n)
    train, test = split_dataset(ds, frac)
    assert (len(train), len(test)) == sizes
    assert train.t[-1] < test.t[0]


@pytest.mark.parametrize("frac", [0.0, 1.0])
def test_split_rejects_bad_fraction(frac):
    with pytest.raises(ValueError):
        split_dataset(synthetic(10), frac)


def test_dataset_is_read_only():
    ds = synthetic(5)
    with pytest.raises(ValueError):
        ds.observations[0, 0] = 1.0


def test_dataset_rejects_uneven_timestamps():
    with pytest.raises(ValidationError):
        Dataset.from_arrays([0.0, 0.02, 0.05], np.zeros((3, 4)), np.zeros((3, 2)))


def test_samples_view():
    ds = Dataset([DemoSample(OBS, Twist(0.5, 0.1))])
    assert ds[0].obs == OBS
    assert ds[0].action == Twist(0.5, 0.1)


def test_empty_round_trip(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(Dataset(), path)
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"
    assert len(read_csv(path)) == 0


def test_full_size_line_count(tmp_path):
    path = tmp_path / "d.csv"
    write_csv(synthetic(5500), path)
    assert len(path.read_bytes().split(b"\n")) - 1 == 5501


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 30), st.sampled_from([10.0, 50.0, 100.0]), st.data())
def test_csv_round_trip_property(tmp_path_factory, n, rate, data):
    obs = np.array(data.draw(st.lists(st.lists(finite, min_size=4, max_size=4), min_size=n, max_size=n))).reshape(n, 4)
    act = np.array(data.draw(st.lists(st.lists(finite, min_size=2, max_size=2), min_size=n, max_size=n))).reshape(n, 2)
    ds = Dataset.from_arrays(np.arange(n) / rate, obs, act, rate, {"seed": 3})
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(ds, path)
    back = read_csv(path)
    assert back == ds
    assert back.meta == {"seed": 3}
    assert dumps_csv(back) == dumps_csv(ds)


def test_short_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    text = dumps_csv(synthetic(5)).splitlines()
    text[3] = ",".join(text[3].split(",")[:6])
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(ParseError) as info:
        read_csv(path)
    assert info.value.line == 4


def test_non_numeric_field(tmp_path):
    path = tmp_path / "bad.csv"
    text = dumps_csv(synthetic(3)).splitlines()
    text[2] = "0.02,x,1,1,1,1,1"
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(ParseError) as info:
        read_csv(path)
    assert info.value.line == 3


def test_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n")
    with pytest.raises(ParseError):
        read_csv(path)


def test_non_increasing_time(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(CSV_HEADER) + "\n0.1,1,1,1,1,1,1\n0.0,1,1,1,1,1,1\n")
    with pytest.raises(ValidationError):
        read_csv(path)
