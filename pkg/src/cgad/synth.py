"""Ground-truth generator: random linear DBNs and time series simulated from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (CgadError, MultivariateSeries, SegmentedSeries, WeightedDbn,
                   find_cycle, validate_series)
from .design import segment

BURN_IN = 100
SPECTRAL_BOUND = 0.9


class SingularSystem(CgadError, RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    node_count: int = 8
    lag: int = 1
    edge_density: float = 0.3
    weight_range: tuple[float, float] = (0.5, 2.0)
    noise_std: float = 0.1
    seed: int = 0
    perturbation: int = 0
    # which edge family is rewired between regimes: "both", "intra" or "inter"
    rewire: str = "both"

    def __post_init__(self):
        lo, hi = self.weight_range
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if self.lag < 0:
            raise ValueError("lag must be >= 0")
        if not 0 <= self.edge_density < 1:
            raise ValueError("edge_density must lie in [0, 1)")
        if not hi >= lo > 0:
            raise ValueError("weight_range needs hi >= lo > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.perturbation < 0:
            raise ValueError("perturbation must be >= 0")
        if self.rewire not in ("both", "intra", "inter"):
            raise ValueError(f"unknown rewire mode {self.rewire!r}")


def _weights(rng, n, lo, hi):
    return rng.uniform(lo, hi, size=n) * rng.choice([-1.0, 1.0], size=n)


def _companion_radius(W, A, lag):
    k = W.shape[0]
    if lag == 0:
        return 0.0
    M = np.linalg.inv(np.eye(k) - W)
    C = np.zeros((lag * k, lag * k))
    for ell in range(lag):
        C[ell * k:(ell + 1) * k, :k] = A[ell * k:(ell + 1) * k] @ M
    if lag > 1:
        C[:(lag - 1) * k, k:] = np.eye((lag - 1) * k)
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def _stabilize(W, A, lag):
    norm = np.linalg.norm(W, 2)
    if norm > SPECTRAL_BOUND:
        W = W * (SPECTRAL_BOUND / norm)
    radius = _companion_radius(W, A, lag)
    while radius > SPECTRAL_BOUND:
        A = A * (0.99 * SPECTRAL_BOUND / radius)
        radius = _companion_radius(W, A, lag)
    return W, A


def random_dbn(spec: GeneratorSpec, rng: Optional[np.random.Generator] = None) -> WeightedDbn:
    """Random DAG-supported intra matrix plus dense-candidate lag blocks.

    Intra edges only point forward in a random node order. ``W`` is rescaled to
    spectral norm <= 0.9 and ``A`` so the lag recursion has spectral radius <= 0.9.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    k, p = spec.node_count, spec.lag
    lo, hi = spec.weight_range
    order = rng.permutation(k)
    W = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            if rng.random() < spec.edge_density:
                W[order[a], order[b]] = _weights(rng, 1, lo, hi)[0]
    mask = rng.random((p * k, k)) < spec.edge_density
    A = np.where(mask, _weights(rng, p * k * k, lo, hi).reshape(p * k, k), 0.0)
    W, A = _stabilize(W, A, p)
    return WeightedDbn(W, A, p)


def _topo_ok(W, j, i):
    """Would adding j -> i to the support of W keep it acyclic?"""
    edges = {(int(a), int(b)) for a, b in zip(*np.nonzero(W))} | {(j, i)}
    return find_cycle(edges, W.shape[0]) is None


def perturb_dbn(dbn: WeightedDbn, count: int, rng: np.random.Generator,
                weight_range=(0.5, 2.0), rewire: str = "both") -> WeightedDbn:
    """Move ``count`` existing edges to fresh positions with fresh weights.

    Removed positions are never refilled and new positions were empty in the
    original, so the support symmetric difference is exactly ``2 * count``.
    """
    k, p = dbn.node_count, dbn.lag
    W = np.array(dbn.intra, copy=True)
    A = np.array(dbn.inter, copy=True)
    lo, hi = weight_range
    candidates = []
    if rewire in ("both", "intra"):
        candidates += [("W", int(j), int(i)) for j, i in zip(*np.nonzero(W))]
    if rewire in ("both", "inter"):
        candidates += [("A", int(r), int(i)) for r, i in zip(*np.nonzero(A))]
    if count > len(candidates):
        raise ValueError(f"only {len(candidates)} edges available to rewire, asked for {count}")
    original_w = W != 0
    original_a = A != 0
    picks = rng.choice(len(candidates), size=count, replace=False)
    for idx in sorted(int(i) for i in picks):
        kind, r, c = candidates[idx]
        if kind == "W":
            W[r, c] = 0.0
            free = [(j, i) for j in range(k) for i in range(k)
                    if j != i and not original_w[j, i] and W[j, i] == 0 and _topo_ok(W, j, i)]
            if not free:
                raise ValueError("no acyclic free intra position left")
            j, i = free[rng.integers(len(free))]
            W[j, i] = _weights(rng, 1, lo, hi)[0]
        else:
            A[r, c] = 0.0
            free = [(a, b) for a in range(p * k) for b in range(k)
                    if not original_a[a, b] and A[a, b] == 0]
            if not free:
                raise ValueError("no free inter position left")
            a, b = free[rng.integers(len(free))]
            A[a, b] = _weights(rng, 1, lo, hi)[0]
    W, A = _stabilize(W, A, p)
    return WeightedDbn(W, A, p, dbn.sensor_names)


def simulate(dbn: WeightedDbn, steps: int, noise_std: float, seed: int = 0,
             sensor_names=None) -> MultivariateSeries:
    """Draw ``steps`` rows of ``x_t = (lags @ A + z_t) (I - W)^-1`` after burn-in."""
    k, p = dbn.node_count, dbn.lag
    if steps <= p:
        raise ValueError(f"steps must exceed lag ({p})")
    try:
        mix = np.linalg.inv(np.eye(k) - dbn.intra)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(mix)):
        raise SingularSystem("I - W is singular")
    rng = np.random.default_rng(seed)
    total = steps + BURN_IN
    noise = rng.normal(0.0, 1.0, size=(total + p, k)) * noise_std
    out = np.zeros((total + p, k))
    out[:p] = noise[:p]
    blocks = [dbn.lag_block(ell) for ell in range(1, p + 1)]
    for t in range(p, total + p):
        drive = noise[t].copy()
        for ell, block in enumerate(blocks, start=1):
            drive += out[t - ell] @ block
        out[t] = drive @ mix
    names = sensor_names or dbn.sensor_names or [f"x{i}" for i in range(k)]
    return validate_series(out[p + BURN_IN:], names)


@dataclass(frozen=True, eq=False)
class TwoRegimeDataset:
    series: MultivariateSeries
    segmented: SegmentedSeries
    normal_dbn: WeightedDbn
    attack_dbn: WeightedDbn


def regime_pair(spec: GeneratorSpec) -> tuple[WeightedDbn, WeightedDbn]:
    """Normal DBN and its rewired attack counterpart, both fixed by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    names = tuple(f"x{i}" for i in range(spec.node_count))
    normal = random_dbn(spec, rng)
    normal = WeightedDbn(normal.intra, normal.inter, normal.lag, names)
    attack = perturb_dbn(normal, spec.perturbation, rng, spec.weight_range, spec.rewire)
    return normal, attack


def two_regime_dataset(spec: GeneratorSpec, normal_steps: int, attack_steps: int,
                       segment_len: int, sim_seed: Optional[int] = None) -> TwoRegimeDataset:
    """Normal / attack / normal blocks; normal steps are split evenly around the attack.

    The regime DBNs depend only on ``spec.seed``; ``sim_seed`` (default
    ``spec.seed + 1``) drives the noise, so train and test sets can share regimes.
    """
    if normal_steps % segment_len or attack_steps % segment_len:
        raise ValueError("step counts must be multiples of segment_len")
    normal, attack = regime_pair(spec)
    sim_seed = spec.seed + 1 if sim_seed is None else sim_seed
    seeds = np.random.SeedSequence(sim_seed).spawn(3)
    n_normal_segs = normal_steps // segment_len
    before = (n_normal_segs - n_normal_segs // 2) * segment_len
    after = normal_steps - before
    blocks, labels = [], []
    for (dbn, steps, lab), ss in zip(((normal, before, 0), (attack, attack_steps, 1), (normal, after, 0)), seeds):
        if steps == 0:
            continue
        seed = int(ss.generate_state(1)[0])
        blocks.append(simulate(dbn, steps, spec.noise_std, seed, normal.sensor_names).values)
        labels.append(np.full(steps, lab, dtype=np.int8))
    series = validate_series(np.vstack(blocks), normal.sensor_names, np.concatenate(labels))
    return TwoRegimeDataset(series, segment(series, segment_len), normal, attack)
