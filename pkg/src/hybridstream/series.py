"""Core time-series containers and transforms shared by every pipeline stage.

A :class:`Series` is an immutable, timestamp-ordered block of multivariate
records. Everything downstream (window injection, scaling, lag-feature
construction, train/stream splitting) operates on these value objects, so
they can be shared freely between concurrent actors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

import numpy as np

DEFAULT_VARIABLES = ("db1t_avg", "db2t_avg", "gb1t_avg", "gb2t_avg", "ot_avg")


@dataclass(frozen=True)
class Record:
    """One timestamped observation of all variables."""

    timestamp: int
    features: tuple[float, ...]
    target_index: int = -1

    @property
    def target(self) -> float:
        return self.features[self.target_index]


@dataclass(frozen=True)
class Series:
    """Ordered multivariate series with strictly increasing integer timestamps.

    ``values`` has shape (n, k); column ``target_index`` is the prediction
    variable (the last column by default).
    """

    timestamps: np.ndarray
    values: np.ndarray
    variables: tuple[str, ...] = DEFAULT_VARIABLES
    target_index: int = -1
    source: str = "synthetic"
    seed: int | None = None

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {vals.shape}")
        if ts.shape[0] != vals.shape[0]:
            raise ValueError("timestamps and values disagree on record count")
        if vals.shape[1] != len(self.variables):
            raise ValueError(
                f"expected {len(self.variables)} variables, got {vals.shape[1]} columns"
            )
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("series contains non-finite values")
        ts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.timestamps.shape[0])

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def target_values(self) -> np.ndarray:
        return self.values[:, self.target_index]

    def record(self, i: int) -> Record:
        return Record(
            timestamp=int(self.timestamps[i]),
            features=tuple(float(v) for v in self.values[i]),
            target_index=self.target_index,
        )

    def iter_records(self) -> Iterator[Record]:
        for i in range(len(self)):
            yield self.record(i)

    def slice(self, start: int, stop: int) -> "Series":
        return replace(self, timestamps=self.timestamps[start:stop], values=self.values[start:stop])

    def concat(self, other: "Series") -> "Series":
        if other.variables != self.variables:
            raise ValueError("cannot concatenate series with different variables")
        return replace(
            self,
            timestamps=np.concatenate([self.timestamps, other.timestamps]),
            values=np.concatenate([self.values, other.values]),
        )


@dataclass(frozen=True)
class TimeWindow:
    """A throttled batch of stream records, the unit of all pipeline work."""

    index: int
    records: Series
    open_tick: int
    close_tick: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("window index must be non-negative")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature min-max scaling to [0, 1] over the fitted range.

    Constant features map to 0.0 on transform (and back to their minimum on
    inverse transform). Values outside the fitted range are NOT clipped:
    drifted stream data is expected to exceed historical extremes and the
    excursion is exactly the signal the speed layer needs.
    """

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.minimum, dtype=np.float64)
        hi = np.asarray(self.maximum, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("minimum/maximum must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("per-feature minimum exceeds maximum")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def transform_values(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.minimum.shape[0]:
            raise ValueError("value width does not match fitted feature count")
        span = self.span
        safe = np.where(span > 0.0, span, 1.0)
        out = (values - self.minimum) / safe
        return np.where(span > 0.0, out, 0.0)

    def inverse_values(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.minimum.shape[0]:
            raise ValueError("value width does not match fitted feature count")
        return values * self.span + self.minimum

    def transform_target(self, values: np.ndarray, target_index: int = -1) -> np.ndarray:
        span = self.span[target_index]
        if span <= 0.0:
            return np.zeros_like(np.asarray(values, dtype=np.float64))
        return (np.asarray(values, dtype=np.float64) - self.minimum[target_index]) / span

    def inverse_target(self, values: np.ndarray, target_index: int = -1) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.span[target_index] + self.minimum[target_index]


@dataclass(frozen=True)
class SupervisedSet:
    """Lag-window regression samples: inputs (m, lag*k), targets (m,)."""

    inputs: np.ndarray
    targets: np.ndarray
    lag: int

    def __post_init__(self) -> None:
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError("inputs must be (m, d) and targets (m,)")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    def __len__(self) -> int:
        return int(self.targets.shape[0])


def fit_scaler(series: Series) -> MinMaxScaler:
    """Fit per-feature min/max to the observed extremes of ``series``."""
    if len(series) == 0:
        raise ValueError("cannot fit a scaler on an empty series")
    return MinMaxScaler(minimum=series.values.min(axis=0), maximum=series.values.max(axis=0))


def transform(scaler: MinMaxScaler, series: Series) -> Series:
    return replace(series, values=scaler.transform_values(series.values))


def inverse_transform(scaler: MinMaxScaler, series: Series) -> Series:
    return replace(series, values=scaler.inverse_values(series.values))


def make_supervised(series: Series, lag: int) -> SupervisedSet:
    """Build lag-window samples: row j holds all variables at steps j..j+lag-1
    (time-major flattened), target j is the target variable at step j+lag.
    """
    if lag < 1:
        raise ValueError("lag must be >= 1")
    n = len(series)
    if n <= lag:
        raise ValueError(f"series of length {n} is too short for lag {lag}")
    k = series.n_variables
    windows = np.lib.stride_tricks.sliding_window_view(series.values, (lag, k))[:-1, 0]
    inputs = windows.reshape(n - lag, lag * k)
    targets = series.target_values[lag:]
    return SupervisedSet(inputs=inputs.copy(), targets=targets.copy(), lag=lag)


def split(series: Series, train_fraction: float) -> tuple[Series, Series]:
    """Order-preserving prefix/suffix split; the prefix gets
    floor(train_fraction * len) records."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    cut = int(np.floor(train_fraction * len(series)))
    return series.slice(0, cut), series.slice(cut, len(series))


def read_series_csv(
    path: str | Path,
    variables: tuple[str, ...] | None = None,
    target: str | None = None,
    timestamp_format: str = "ticks",
    timestamp_column: str = "timestamp",
    source: str | None = None,
) -> Series:
    """Load a Series from a headed CSV file.

    ``timestamp_format`` is ``"ticks"`` (integers) or ``"iso8601"``. Fails
    fast with the offending line number on unparseable rows, missing columns
    or unordered timestamps.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if timestamp_column not in header:
            raise ValueError(f"{path}: missing '{timestamp_column}' column")
        ts_col = header.index(timestamp_column)
        if variables is None:
            variables = tuple(h for i, h in enumerate(header) if i != ts_col)
        missing = [v for v in variables if v not in header]
        if missing:
            raise ValueError(f"{path}: missing variable columns {missing}")
        var_cols = [header.index(v) for v in variables]

        timestamps: list[int] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts = _parse_timestamp(row[ts_col], timestamp_format)
                vals = [float(row[c]) for c in var_cols]
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: unparseable row ({exc})") from None
            if not all(np.isfinite(vals)):
                raise ValueError(f"{path}:{lineno}: non-finite value")
            if timestamps and ts <= timestamps[-1]:
                raise ValueError(f"{path}:{lineno}: timestamps not strictly increasing")
            timestamps.append(ts)
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    target_index = -1 if target is None else variables.index(target)
    return Series(
        timestamps=np.array(timestamps, dtype=np.int64),
        values=np.array(rows, dtype=np.float64),
        variables=tuple(variables),
        target_index=target_index,
        source=source or str(path),
    )


def write_series_csv(series: Series, path: str | Path, timestamp_column: str = "timestamp") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([timestamp_column, *series.variables])
        for i in range(len(series)):
            writer.writerow([int(series.timestamps[i]), *(repr(float(v)) for v in series.values[i])])


def _parse_timestamp(raw: str, timestamp_format: str) -> int:
    if timestamp_format == "ticks":
        return int(raw)
    if timestamp_format == "iso8601":
        dt = datetime.fromisoformat(raw.strip())
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    raise ValueError(f"unknown timestamp_format {timestamp_format!r}")
