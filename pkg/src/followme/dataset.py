"""Demonstration storage, feature selection, windowing and chronological splits."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from .sim import Twist, UwbObservation

CSV_HEADER = ("t", "r1", "r2", "a1", "a2", "v", "omega")


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class InputConfig(str, enum.Enum):
    """Which UWB channels a model consumes."""

    RANGES = "ranges"
    ANGLES = "angles"
    ALL = "all"

    @property
    def columns(self) -> Tuple[int, ...]:
        # column order in the observation matrix is r1, r2, a1, a2
        return {"ranges": (0, 1), "angles": (2, 3), "all": (0, 1, 2, 3)}[self.value]

    @property
    def feature_dim(self) -> int:
        return len(self.columns)

    @classmethod
    def parse(cls, value) -> "InputConfig":
        if isinstance(value, cls):
            return value
        aliases = {
            "r": "ranges", "range": "ranges", "rangesonly": "ranges",
            "a": "angles", "angle": "angles", "anglesonly": "angles",
            "ra": "all", "both": "all", "rangesandangles": "all",
        }
        value = str(value).lower()
        return cls(aliases.get(value, value))


@dataclass(frozen=True)
class DemoSample:
    obs: UwbObservation
    action: Twist


class Dataset:
    """Immutable, fixed-rate demonstration log.

    Stored column-wise: ``t`` (n,), ``observations`` (n, 4) as r1, r2, a1, a2 and
    ``actions`` (n, 2) as v, omega.
    """

    def __init__(self, samples=(), rate_hz: float = 50.0, meta: dict | None = None, *, arrays=None):
        if arrays is not None:
            t, obs, act = (np.array(a, dtype=float) for a in arrays)
        else:
            samples = list(samples)
            t = np.array([s.obs.t for s in samples], dtype=float)
            obs = np.array([[s.obs.r1, s.obs.r2, s.obs.a1, s.obs.a2] for s in samples], dtype=float).reshape(-1, 4)
            act = np.array([[s.action.v, s.action.omega] for s in samples], dtype=float).reshape(-1, 2)
        if rate_hz <= 0:
            raise ValidationError("rate_hz must be positive")
        if not (len(t) == len(obs) == len(act)) or obs.shape[1:] != (4,) or act.shape[1:] != (2,):
            raise ValidationError("inconsistent dataset column shapes")
        if len(t) > 1:
            dt = np.diff(t)
            bad = np.flatnonzero(np.abs(dt - 1.0 / rate_hz) > 1e-9)
            if bad.size:
                i = int(bad[0])
                raise ValidationError(f"timestamps not spaced by 1/{rate_hz} s between samples {i} and {i + 1}")
        for a in (t, obs, act):
            a.setflags(write=False)
        self.t, self.observations, self.actions = t, obs, act
        self.rate_hz = float(rate_hz)
        self.meta = dict(meta or {})

    @classmethod
    def from_arrays(cls, t, observations, actions, rate_hz: float = 50.0, meta: dict | None = None) -> "Dataset":
        return cls(rate_hz=rate_hz, meta=meta, arrays=(t, observations, actions))

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> DemoSample:
        r1, r2, a1, a2 = self.observations[i]
        v, w = self.actions[i]
        return DemoSample(UwbObservation(float(self.t[i]), r1, r2, a1, a2), Twist(v, w))

    def __iter__(self) -> Iterator[DemoSample]:
        return (self[i] for i in range(len(self)))

    @property
    def samples(self) -> Tuple[DemoSample, ...]:
        return tuple(self)

    def subset(self, start: int, stop: int) -> "Dataset":
        return Dataset.from_arrays(
            self.t[start:stop], self.observations[start:stop], self.actions[start:stop], self.rate_hz, self.meta
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.rate_hz == other.rate_hz
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.observations, other.observations)
            and np.array_equal(self.actions, other.actions)
            and self.meta == other.meta
        )

    def __repr__(self) -> str:
        return f"Dataset(n={len(self)}, rate_hz={self.rate_hz})"


def select_inputs(obs: UwbObservation, cfg: InputConfig) -> np.ndarray:
    row = np.array([obs.r1, obs.r2, obs.a1, obs.a2])
    return row[list(InputConfig.parse(cfg).columns)]


def feature_matrix(ds: Dataset, cfg: InputConfig) -> np.ndarray:
    """Per-sample features, shape (n, D)."""
    return ds.observations[:, list(InputConfig.parse(cfg).columns)]


def make_windows(ds: Dataset, cfg: InputConfig, window_len: int = 100, stride: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Sliding observation windows and the action at each window's last step.

    Returns ``(X, y)`` with ``X`` of shape (n_windows, window_len, D) and ``y`` of
    shape (n_windows, 2). Window ``k`` covers samples
    ``[k * stride, k * stride + window_len)``.
    """
    if window_len < 1 or stride < 1:
        raise ValueError("window_len and stride must be >= 1")
    if len(ds) < window_len:
        raise InsufficientData(f"{len(ds)} samples cannot fill a window of {window_len}")
    feats = feature_matrix(ds, cfg)
    view = np.lib.stride_tricks.sliding_window_view(feats, window_len, axis=0)  # (n-W+1, D, W)
    X = np.ascontiguousarray(view[::stride].transpose(0, 2, 1))
    last = np.arange(len(X)) * stride + window_len - 1
    return X, ds.actions[last].copy()


def split_dataset(ds: Dataset, train_fraction: float, window_len: int = 1) -> Tuple[Dataset, Dataset]:
    """Contiguous chronological split: the first ``round(frac * N)`` samples train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n_train = int(math.floor(train_fraction * len(ds) + 0.5))
    train, test = ds.subset(0, n_train), ds.subset(n_train, len(ds))
    if min(len(train), len(test)) < window_len:
        raise InsufficientData(
            f"split {len(train)}/{len(test)} leaves a partition shorter than window_len={window_len}"
        )
    return train, test


# -- CSV persistence --------------------------------------------------------------


def meta_path(path) -> str:
    return os.fspath(path) + ".meta.json"


def dumps_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for t, o, a in zip(ds.t, ds.observations, ds.actions):
        buf.write(",".join(repr(float(x)) for x in (t, *o, *a)) + "\n")
    return buf.getvalue()


def dumps_meta(ds: Dataset) -> str:
    return json.dumps({"rate_hz": ds.rate_hz, "meta": ds.meta}, indent=2, sort_keys=True) + "\n"


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` as CSV plus a ``<path>.meta.json`` sidecar."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_csv(ds))
    with open(meta_path(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_meta(ds))


def read_csv(path, rate_hz: float | None = None) -> Dataset:
    """Load a dataset; rate and provenance come from the sidecar when present."""
    meta = {}
    side = meta_path(path)
    if os.path.exists(side):
        with open(side, encoding="utf-8") as fh:
            payload = json.load(fh)
        meta = payload.get("meta", {})
        rate_hz = rate_hz or payload.get("rate_hz")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}", 1)
    values = np.empty((len(rows) - 1, len(CSV_HEADER)))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line)
        try:
            values[i] = [float(x) for x in row]
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
        if not np.all(np.isfinite(values[i])):
            raise ParseError("non-finite value", line)
    t = values[:, 0]
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        i = int(np.flatnonzero(np.diff(t) <= 0)[0])
        raise ValidationError(f"timestamps not strictly increasing at line {i + 3}")
    if rate_hz is None:
        rate_hz = 1.0 / float(np.median(np.diff(t))) if len(t) > 1 else 50.0
    return Dataset.from_arrays(t, values[:, 1:5], values[:, 5:7], rate_hz, meta)
