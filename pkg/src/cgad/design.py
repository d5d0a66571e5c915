"""Segmentation and lagged design matrices for the linear dynamic SEM."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import LagTooLarge, MultivariateSeries, SegmentedSeries, SegmentTooShort, ShapeMismatch


@dataclass(frozen=True, eq=False)
class LaggedDesign:
    """``current`` is X (R x K); ``lagged`` is Y (R x pK) with blocks ordered lag 1..p."""

    current: np.ndarray
    lagged: np.ndarray
    lag: int

    @property
    def n_rows(self) -> int:
        return self.current.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.current.shape[1]


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    current_mean: np.ndarray
    current_std: np.ndarray
    lagged_mean: np.ndarray
    lagged_std: np.ndarray

    @property
    def zero_variance(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean masks of columns that were only centered."""
        return self.current_std == 0, self.lagged_std == 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("current_mean", "current_std", "lagged_mean", "lagged_std")}

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        return cls(**{k: np.asarray(d[k], dtype=float) for k in
                      ("current_mean", "current_std", "lagged_mean", "lagged_std")})


def segment(series: MultivariateSeries, segment_len: int) -> SegmentedSeries:
    """Cut into ``floor(T / M)`` consecutive windows; a trailing partial window is dropped.

    A segment is labeled 1 when any point inside it is labeled 1.
    """
    if segment_len < 2:
        raise SegmentTooShort(f"segment_len must be >= 2, got {segment_len}")
    n = series.n_steps // segment_len
    if n == 0:
        raise SegmentTooShort(f"series of {series.n_steps} rows is shorter than one segment ({segment_len})")
    segs = tuple(series.values[s * segment_len:(s + 1) * segment_len] for s in range(n))
    if series.point_labels is None:
        labels = (0,) * n
    else:
        labels = tuple(int(series.point_labels[s * segment_len:(s + 1) * segment_len].any())
                       for s in range(n))
    return SegmentedSeries(segs, labels, series.sensor_names)


def build_design(segments: Sequence[np.ndarray], lag: int) -> LaggedDesign:
    """Stack per-segment (current, lagged) rows; no lag pair spans two segments."""
    if lag < 0:
        raise LagTooLarge(f"lag must be non-negative, got {lag}")
    segments = [np.asarray(s, dtype=float) for s in segments]
    if not segments:
        raise ShapeMismatch("no segments given")
    shape = segments[0].shape
    if any(s.shape != shape for s in segments):
        raise ShapeMismatch("segments differ in shape")
    m, k = shape
    if lag >= m:
        raise LagTooLarge(f"lag {lag} needs segments longer than {m} rows")

    xs, ys = [], []
    for seg in segments:
        xs.append(seg[lag:])
        blocks = [seg[lag - ell: m - ell] for ell in range(1, lag + 1)]
        ys.append(np.hstack(blocks) if blocks else np.empty((m - lag, 0)))
    return LaggedDesign(np.vstack(xs), np.vstack(ys), lag)


def _zscore(mat, mean, std):
    safe = np.where(std > 0, std, 1.0)
    return (mat - mean) / safe


def standardize(design: LaggedDesign, stats: Optional[StandardizationStats] = None,
                mode: str = "column"):
    """Center every column of X and Y and divide by a scale (population std).

    ``mode="column"`` z-scores each column on its own. ``mode="pooled"`` uses one
    scale for all columns of X and Y (the RMS of centered X), which keeps the
    fitted weights in the data's own units and preserves relative variances.

    Without ``stats`` the statistics are estimated from ``design`` and returned so the
    same transform can be replayed on held-out segments. Zero-variance columns are
    centered only (see ``StandardizationStats.zero_variance``).
    """
    if stats is None:
        x_mean = design.current.mean(axis=0)
        y_mean = design.lagged.mean(axis=0)
        if mode == "column":
            x_std = design.current.std(axis=0)
            y_std = design.lagged.std(axis=0)
        elif mode == "pooled":
            scale = float(np.sqrt(np.mean((design.current - x_mean) ** 2)))
            x_std = np.where(design.current.std(axis=0) > 0, scale, 0.0)
            y_std = np.where(design.lagged.std(axis=0) > 0, scale, 0.0)
        else:
            raise ValueError(f"unknown standardization mode {mode!r}")
        stats = StandardizationStats(x_mean, x_std, y_mean, y_std)
    elif (stats.current_mean.shape[0] != design.current.shape[1]
          or stats.lagged_mean.shape[0] != design.lagged.shape[1]):
        raise ShapeMismatch("standardization stats do not match design columns")
    out = LaggedDesign(
        _zscore(design.current, stats.current_mean, stats.current_std),
        _zscore(design.lagged, stats.lagged_mean, stats.lagged_std),
        design.lag,
    )
    return out, stats
