"""Domain types shared by every stage of the detector.

Orientation conventions used throughout the package:

* matrices of sensor readings are ``rows = time steps``, ``columns = sensors``;
* a weight ``W[j, i] != 0`` means sensor ``j`` drives sensor ``i``, so the
  linear model reads ``X = X @ W + Y @ A + Z`` with data rows as row vectors;
* lag blocks of ``A`` (and of the lagged design ``Y``) are ordered
  ``lag 1, lag 2, ..., lag p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class CgadError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(CgadError, ValueError):
    pass


class NonFiniteValue(CgadError, ValueError):
    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value at ({row}, {col})")


class DuplicateSensorName(CgadError, ValueError):
    pass


class SegmentTooShort(CgadError, ValueError):
    pass


class LagTooLarge(CgadError, ValueError):
    pass


class DidNotConverge(CgadError, RuntimeError):
    """Augmented-Lagrangian loop ran out of penalty headroom; ``trace`` is attached."""

    def __init__(self, message: str, trace=None, dbn=None):
        super().__init__(message)
        self.trace = trace
        self.dbn = dbn


class CyclicAfterThreshold(CgadError, RuntimeError):
    pass


class NodeSetMismatch(CgadError, ValueError):
    pass


class MissingClass(CgadError, ValueError):
    pass


class LengthMismatch(CgadError, ValueError):
    pass


class DegenerateLabels(CgadError, ValueError):
    pass


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MultivariateSeries:
    """A ``T x K`` block of sensor readings with optional per-point labels."""

    values: np.ndarray
    sensor_names: tuple[str, ...]
    point_labels: Optional[np.ndarray] = None

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.values.shape[1]


def validate_series(values, sensor_names: Sequence[str], point_labels=None) -> MultivariateSeries:
    """Check shape, finiteness, name uniqueness and label length; return a frozen series."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ShapeMismatch(f"values must be 2-D, got {arr.ndim}-D")
    n_steps, n_sensors = arr.shape
    if n_steps < 1:
        raise ShapeMismatch("series has no rows")
    if n_sensors < 2:
        raise ShapeMismatch(f"need at least 2 sensors, got {n_sensors}")
    names = tuple(str(n) for n in sensor_names)
    if len(names) != n_sensors:
        raise ShapeMismatch(f"{len(names)} sensor names for {n_sensors} columns")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateSensorName(f"duplicate sensor names: {dupes}")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))

    labels = None
    if point_labels is not None:
        labels = np.asarray(point_labels)
        if labels.ndim != 1 or labels.shape[0] != n_steps:
            raise ShapeMismatch(f"{labels.size} labels for {n_steps} rows")
        if not np.isin(labels, (0, 1)).all():
            raise ShapeMismatch("point labels must be 0 or 1")
        labels = _frozen_array(labels, dtype=np.int8)
    return MultivariateSeries(_frozen_array(arr), names, labels)


@dataclass(frozen=True, eq=False)
class SegmentedSeries:
    """Non-overlapping, temporally ordered ``M x K`` windows with one label each."""

    segments: tuple[np.ndarray, ...]
    segment_labels: tuple[int, ...]
    sensor_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.segments) != len(self.segment_labels):
            raise ShapeMismatch("one label per segment required")
        shapes = {s.shape for s in self.segments}
        if len(shapes) > 1:
            raise ShapeMismatch(f"segments differ in shape: {sorted(shapes)}")
        if any(lab not in (0, 1) for lab in self.segment_labels):
            raise ShapeMismatch("segment labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def segment_len(self) -> int:
        return self.segments[0].shape[0]

    @property
    def n_sensors(self) -> int:
        return self.segments[0].shape[1]

    def of_class(self, label: int) -> list[np.ndarray]:
        return [s for s, y in zip(self.segments, self.segment_labels) if y == label]


@dataclass(frozen=True, eq=False)
class WeightedDbn:
    """Intra-slice weights ``intra`` (K x K) and stacked lag weights ``inter`` (pK x K)."""

    intra: np.ndarray
    inter: np.ndarray
    lag: int
    sensor_names: tuple[str, ...] = ()

    def __post_init__(self):
        k = self.intra.shape[0]
        if self.intra.shape != (k, k):
            raise ShapeMismatch(f"intra must be square, got {self.intra.shape}")
        if self.inter.shape != (self.lag * k, k):
            raise ShapeMismatch(f"inter must be ({self.lag * k}, {k}), got {self.inter.shape}")
        if np.any(np.diag(self.intra) != 0):
            raise ShapeMismatch("intra diagonal must be zero")
        if self.sensor_names and len(self.sensor_names) != k:
            raise ShapeMismatch("sensor_names length must equal node count")

    @property
    def node_count(self) -> int:
        return self.intra.shape[0]

    def lag_block(self, ell: int) -> np.ndarray:
        k = self.node_count
        return self.inter[(ell - 1) * k: ell * k]


def find_cycle(edges, node_count: int) -> Optional[list[int]]:
    """Return one directed cycle as a node list, or None. Iterative DFS."""
    adj: list[list[int]] = [[] for _ in range(node_count)]
    for j, i in sorted(edges):
        adj[j].append(i)
    state = [0] * node_count  # 0 new, 1 on stack, 2 done
    parent = [-1] * node_count
    for root in range(node_count):
        if state[root]:
            continue
        stack = [(root, iter(adj[root]))]
        state[root] = 1
        while stack:
            node, children = stack[-1]
            for child in children:
                if state[child] == 0:
                    state[child] = 1
                    parent[child] = node
                    stack.append((child, iter(adj[child])))
                    break
                if state[child] == 1:
                    cycle = [node]
                    while cycle[-1] != child:
                        cycle.append(parent[cycle[-1]])
                    return cycle[::-1]
            else:
                state[node] = 2
                stack.pop()
    return None


@dataclass(frozen=True)
class BinaryDbn:
    """Thresholded edge sets: intra pairs ``(j, i)`` and lagged triples ``(j, lag, i)``."""

    intra_edges: frozenset
    inter_edges: frozenset
    node_count: int
    lag: int

    def __post_init__(self):
        object.__setattr__(self, "intra_edges", frozenset(tuple(e) for e in self.intra_edges))
        object.__setattr__(self, "inter_edges", frozenset(tuple(e) for e in self.inter_edges))
        k = self.node_count
        for j, i in self.intra_edges:
            if j == i:
                raise ShapeMismatch(f"self loop on node {j}")
            if not (0 <= j < k and 0 <= i < k):
                raise ShapeMismatch(f"intra edge {(j, i)} out of range for {k} nodes")
        for j, ell, i in self.inter_edges:
            if not (0 <= j < k and 0 <= i < k and 1 <= ell <= self.lag):
                raise ShapeMismatch(f"inter edge {(j, ell, i)} out of range")
        cycle = find_cycle(self.intra_edges, k)
        if cycle is not None:
            raise CyclicAfterThreshold(f"intra edges contain cycle {cycle}")

    def typed_edges(self, include_inter: bool = True) -> frozenset:
        """Intra and inter edges tagged so that they never collide."""
        out = {("intra", j, i) for j, i in self.intra_edges}
        if include_inter:
            out |= {("inter", j, ell, i) for j, ell, i in self.inter_edges}
        return frozenset(out)

    @classmethod
    def empty(cls, node_count: int, lag: int) -> "BinaryDbn":
        return cls(frozenset(), frozenset(), node_count, lag)


@dataclass(frozen=True)
class SegmentScore:
    segment_index: int
    shd_attack: float
    shd_normal: float
    score: float
    predicted: int
    converged: bool = True


@dataclass(frozen=True)
class DetectionReport:
    per_segment: tuple[SegmentScore, ...]
    labels: Optional[tuple[int, ...]] = None
    f1_point_adjusted: Optional[float] = None
    roc_auc: Optional[float] = None
    prc_auc: Optional[float] = None
    tie_count: int = 0
    nonconverged_count: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def predictions(self) -> list[int]:
        return [s.predicted for s in self.per_segment]

    @property
    def scores(self) -> list[float]:
        return [s.score for s in self.per_segment]
