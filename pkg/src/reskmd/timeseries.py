"""Time-series ingestion, resampling, delay embedding and windowing.

Turns raw (possibly irregular) recordings into the snapshot pairs consumed
by the Koopman estimators. All value types are immutable after
construction and all operations are pure, so windows can be processed in
parallel without shared mutable state.
"""

import csv
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.interpolate import CubicSpline

from ._validation import (
    check_uniform_times,
    check_weights,
    frozen_array,
)
from .errors import (
    CsvParseError,
    InsufficientDataError,
    TimeOrderingError,
)

__all__ = [
    "RawSeries",
    "SnapshotSet",
    "DelayConfig",
    "load_csv",
    "save_csv",
    "spline_interpolate",
    "hankel_embed",
    "windows",
]


@dataclass(frozen=True)
class RawSeries:
    """A uniformly typed multivariate time series.

    ``times`` is a strictly increasing vector of length T and ``values`` a
    T x N matrix (scalar series are stored as a single column). ``meta``
    is a free-form source label.
    """

    times: np.ndarray
    values: np.ndarray
    meta: str = ""

    def __post_init__(self):
        times = frozen_array(self.times, ndim=1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        values = frozen_array(values, ndim=2)
        if times.shape[0] != values.shape[0]:
            raise ValueError(
                f"times length {times.shape[0]} != values rows {values.shape[0]}"
            )
        if times.shape[0] < 2:
            raise InsufficientDataError("a series needs at least 2 samples")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise ValueError("series contains non-finite entries")
        if np.any(np.diff(times) <= 0):
            raise TimeOrderingError("timestamps must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_samples(self):
        return self.times.shape[0]

    @property
    def n_dims(self):
        return self.values.shape[1]

    def slice(self, start, stop):
        """Contiguous sub-series [start, stop) sharing the parent's buffers."""
        return RawSeries(self.times[start:stop], self.values[start:stop], self.meta)


@dataclass(frozen=True)
class SnapshotSet:
    """Paired state matrices: row i of Y is the one-step successor of row i of X."""

    X: np.ndarray
    Y: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        X = frozen_array(self.X, ndim=2)
        Y = frozen_array(self.Y, ndim=2)
        if X.shape != Y.shape:
            raise ValueError(f"X shape {X.shape} != Y shape {Y.shape}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Y)):
            raise ValueError("snapshots contain non-finite entries")
        w = frozen_array(check_weights(self.weights, X.shape[0]))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "weights", w)

    @property
    def n_pairs(self):
        return self.X.shape[0]

    @property
    def n_dims(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class DelayConfig:
    """Sliding-window geometry: delay depth, window length and hop."""

    d_hankel: int
    t_window: int
    stride: int = 1

    def __post_init__(self):
        if self.d_hankel < 1:
            raise ValueError("d_hankel must be >= 1")
        if self.t_window <= self.d_hankel:
            raise ValueError("t_window must exceed d_hankel")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def load_csv(path, time_column=None, value_columns=None, delimiter=",", meta=None):
    """Read a series from a delimited text file.

    Parameters
    ----------
    path : str or Path
        File to read. An optional single header row is detected by its
        selected cells failing to parse as floats.
    time_column : int or None
        Column index holding timestamps. ``None`` assigns implicit unit
        spacing 0, 1, 2, ...
    value_columns : sequence of int or None
        State columns. ``None`` selects every column except the time one.

    Raises
    ------
    CsvParseError
        On malformed or non-finite selected cells, with the 1-based file
        line number.
    TimeOrderingError
        If the time column is not strictly increasing.
    """
    times, rows = [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for line_no, record in enumerate(reader, start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if width is not None and len(record) != width:
                raise CsvParseError(line_no, f"expected {width} columns, got {len(record)}")
            if value_columns is None:
                selected = [i for i in range(len(record)) if i != time_column]
            else:
                selected = list(value_columns)
            wanted = selected + ([time_column] if time_column is not None else [])
            if line_no == 1 and not _parses_as_floats(record, wanted):
                continue  # header row
            try:
                vals = [float(record[i]) for i in selected]
                t = float(record[time_column]) if time_column is not None else None
            except (ValueError, IndexError) as exc:
                raise CsvParseError(line_no, f"malformed row: {exc}") from exc
            if not all(np.isfinite(v) for v in vals) or (
                t is not None and not np.isfinite(t)
            ):
                raise CsvParseError(line_no, "non-finite value")
            rows.append(vals)
            width = len(record)
            if t is not None:
                times.append(t)
    if len(rows) < 2:
        raise InsufficientDataError(f"{path}: fewer than 2 data rows")
    values = np.asarray(rows, dtype=float)
    t_arr = np.asarray(times) if times else np.arange(len(rows), dtype=float)
    return RawSeries(t_arr, values, meta if meta is not None else str(path))


def _parses_as_floats(record, indices):
    try:
        for i in indices:
            float(record[i])
    except (ValueError, IndexError):
        return False
    return True


def save_csv(series, path, labels=None):
    """Write a series as ``time,x0,...`` with shortest round-trip floats."""
    if labels is None:
        labels = [f"x{i}" for i in range(series.n_dims)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["time"] + list(labels)) + "\n")
        for t, row in zip(series.times, series.values):
            cells = [repr(float(t))] + [repr(float(v)) for v in row]
            fh.write(",".join(cells) + "\n")


def spline_interpolate(series, factor):
    """Resample onto a uniform grid with ``(T-1)*factor + 1`` points.

    Interpolating (not smoothing) cubic spline with not-a-knot end
    conditions, which reproduces polynomials up to degree 3 exactly. With
    a uniform input grid every original sample is reproduced at each
    ``factor``-th output point; ``factor=1`` on an already-uniform grid is
    the identity.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if series.n_samples < 4:
        raise InsufficientDataError("cubic interpolation needs at least 4 samples")
    if factor == 1:
        steps = np.diff(series.times)
        if np.all(np.abs(steps - steps.mean()) <= 1e-9 * abs(steps.mean())):
            return series
    spline = CubicSpline(series.times, series.values, axis=0)
    n_out = (series.n_samples - 1) * factor + 1
    t_out = np.linspace(series.times[0], series.times[-1], n_out)
    return RawSeries(t_out, spline(t_out), series.meta)


def hankel_embed(series, d_hankel, weights=None):
    """Delay-embed a series into snapshot pairs of dimension ``d_hankel * N``.

    Row i of X concatenates samples i .. i+d-1; Y is X shifted by one
    step. A series of length T yields T - d pairs, with uniform quadrature
    weights unless overridden. Requires a uniform time grid.
    """
    if d_hankel < 1:
        raise ValueError("d_hankel must be >= 1")
    T = series.n_samples
    if T <= d_hankel:
        raise InsufficientDataError(
            f"need more than d_hankel={d_hankel} samples, got {T}"
        )
    check_uniform_times(series.times)
    n = series.n_dims
    # (T-d+1, d, n) sliding blocks flattened to delay rows
    blocks = sliding_window_view(series.values, d_hankel, axis=0)
    rows = blocks.transpose(0, 2, 1).reshape(T - d_hankel + 1, d_hankel * n)
    n_pairs = T - d_hankel
    if weights is None:
        weights = np.full(n_pairs, 1.0 / n_pairs)
    return SnapshotSet(rows[:-1], rows[1:], weights)


def windows(series, cfg):
    """Contiguous windows of length ``cfg.t_window`` hopping by ``cfg.stride``.

    Each window's signal timestamp is its end time, so downstream
    indicators are causal. Returns ``floor((T - t_window)/stride) + 1``
    sub-series.
    """
    T = series.n_samples
    if T < cfg.t_window:
        raise InsufficientDataError(
            f"series of length {T} shorter than window {cfg.t_window}"
        )
    out = []
    for start in range(0, T - cfg.t_window + 1, cfg.stride):
        out.append(series.slice(start, start + cfg.t_window))
    return out
