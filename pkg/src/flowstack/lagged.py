"""Lagged supervised datasets: next-day flow against recent flow, rain and temperature."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .basins import BasinDataError, BasinSeries, DateRange

__all__ = ["Predictor", "LaggedDataset", "full_predictor_grid", "build_supervised"]

PROCESSES = ("Q", "P", "T")
DEFAULT_LAG_WINDOW = 30


@dataclass(frozen=True, order=True)
class Predictor:
    """One lagged predictor column: a process letter and a lag in days."""

    process: str
    lag: int

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise BasinDataError(f"unknown process {self.process!r}")
        if self.lag < 1:
            raise BasinDataError(f"lag must be >= 1, got {self.lag}")

    def __str__(self) -> str:
        return f"{self.process}{self.lag}"

    def to_dict(self) -> dict:
        return {"process": self.process, "lag": self.lag}

    @classmethod
    def from_dict(cls, d: dict) -> "Predictor":
        return cls(process=d["process"], lag=int(d["lag"]))


def full_predictor_grid(lag_window: int = DEFAULT_LAG_WINDOW) -> tuple[Predictor, ...]:
    """All candidate columns in canonical order: Q lags 1..L, then P, then T."""
    if lag_window < 1:
        raise BasinDataError(f"lag window must be >= 1, got {lag_window}")
    return tuple(
        Predictor(proc, lag) for proc in PROCESSES for lag in range(1, lag_window + 1)
    )


@dataclass(frozen=True)
class LaggedDataset:
    """Supervised matrix: each row is one target day, columns are lagged values.

    X[i, j] holds the value of columns[j].process exactly columns[j].lag days
    before target_dates[i]; y[i] is streamflow on target_dates[i].
    """

    X: np.ndarray
    y: np.ndarray
    columns: tuple[Predictor, ...]
    target_dates: tuple[date, ...]

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1:
            raise BasinDataError("X must be 2-D and y 1-D")
        if X.shape[0] != len(y) or X.shape[0] != len(self.target_dates):
            raise BasinDataError(
                f"row mismatch: X has {X.shape[0]}, y has {len(y)}, "
                f"{len(self.target_dates)} target dates"
            )
        if X.shape[1] != len(self.columns):
            raise BasinDataError(
                f"column mismatch: X has {X.shape[1]}, {len(self.columns)} descriptors"
            )
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise BasinDataError("non-finite values in supervised data")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "target_dates", tuple(self.target_dates))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def take_rows(self, idx) -> "LaggedDataset":
        """Row subset (fold selection); columns and their meaning are unchanged."""
        idx = np.asarray(idx, dtype=np.intp)
        return LaggedDataset(
            X=self.X[idx],
            y=self.y[idx],
            columns=self.columns,
            target_dates=tuple(self.target_dates[int(i)] for i in idx),
        )


def build_supervised(
    series: BasinSeries,
    lag_window: int = DEFAULT_LAG_WINDOW,
    target_range: DateRange | None = None,
    subset: tuple[Predictor, ...] | None = None,
) -> LaggedDataset:
    """Build the supervised matrix for every target day in target_range.

    Every target day must have lag_window days of history inside the record;
    the builder errors rather than silently dropping early rows. Without a
    subset the columns are the full 3 x lag_window grid in canonical order;
    with one, only the selected columns, in the same relative order.
    """
    if target_range is None:
        first = series.start_date + timedelta(days=lag_window)
        target_range = DateRange(first, series.end_date)
    if len(target_range) < 1:
        raise BasinDataError("empty target range")

    columns = full_predictor_grid(lag_window) if subset is None else tuple(subset)
    if not columns:
        raise BasinDataError("no predictor columns requested")
    max_lag = max(c.lag for c in columns)
    if subset is not None and max_lag > lag_window:
        raise BasinDataError(
            f"subset lag {max_lag} exceeds the lag window {lag_window}"
        )

    first_hist = target_range.start - timedelta(days=lag_window)
    if first_hist < series.start_date:
        raise BasinDataError(
            f"basin {series.basin_id}: targets from {target_range.start} need "
            f"{lag_window} days of history (back to {first_hist}) but the record "
            f"starts {series.start_date}"
        )
    if target_range.end > series.end_date:
        raise BasinDataError(
            f"basin {series.basin_id}: target range ends {target_range.end}, "
            f"record ends {series.end_date}"
        )

    i0 = series.index_of(target_range.start)
    n = len(target_range)
    tgt_idx = i0 + np.arange(n)

    X = np.empty((n, len(columns)))
    for j, col in enumerate(columns):
        X[:, j] = series.process(col.process)[tgt_idx - col.lag]
    y = series.q[tgt_idx]
    dates = tuple(series.date_at(int(i)) for i in tgt_idx)
    return LaggedDataset(X=X, y=y, columns=columns, target_dates=dates)
