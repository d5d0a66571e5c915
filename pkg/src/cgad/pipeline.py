"""Causal profiling of labeled training data and graph-divergence scoring of test segments."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import (BinaryDbn, DetectionReport, DidNotConverge, MissingClass, SegmentedSeries,
                   SegmentScore, ShapeMismatch, WeightedDbn)
from .design import StandardizationStats, build_design, standardize
from .divergence import DivergenceKind, divergence
from .evaluation import f1_point_adjusted, prc_auc, roc_auc
from .structure import SolverConfig, SolverTrace, fit_dbn, threshold

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    lag: int = 1
    segment_len: int = 900
    noise_sigma_scale: float = 0.01
    divergence: DivergenceKind = DivergenceKind.SHD
    include_inter_edges: bool = True
    shd_reversal_cost: int = 2
    # "pooled" keeps relative sensor variances; "column" z-scores each sensor
    standardization: str = "pooled"
    # refit standardization on each test segment instead of reusing training stats
    restandardize_test: bool = False

    def __post_init__(self):
        object.__setattr__(self, "divergence", DivergenceKind(self.divergence))
        if self.lag < 0:
            raise ValueError("lag must be >= 0")
        if self.segment_len < 2 or self.segment_len < self.lag + 1:
            raise ValueError("segment_len must be >= max(2, lag + 1)")
        if self.noise_sigma_scale < 0:
            raise ValueError("noise_sigma_scale must be >= 0")
        if self.shd_reversal_cost not in (1, 2):
            raise ValueError("shd_reversal_cost must be 1 or 2")
        if self.standardization not in ("pooled", "column"):
            raise ValueError(f"unknown standardization {self.standardization!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["divergence"] = self.divergence.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        solver = SolverConfig(**d.pop("solver", {}))
        return cls(solver=solver, **d)


@dataclass(frozen=True, eq=False)
class CausalProfile:
    g_normal: BinaryDbn
    g_attack: BinaryDbn
    weighted_normal: WeightedDbn
    weighted_attack: WeightedDbn
    standardization_stats: StandardizationStats
    config: PipelineConfig
    sensor_names: tuple[str, ...]
    traces: tuple[SolverTrace, ...] = ()

    @property
    def node_count(self) -> int:
        return self.g_normal.node_count

    def to_json(self) -> str:
        def graph(g: BinaryDbn):
            return {"intra": sorted([list(e) for e in g.intra_edges]),
                    "inter": sorted([list(e) for e in g.inter_edges])}

        def weights(w: WeightedDbn):
            return {"intra": w.intra.tolist(), "inter": w.inter.tolist()}

        doc = {
            "format_version": FORMAT_VERSION,
            "sensor_names": list(self.sensor_names),
            "lag": self.config.lag,
            "edge_threshold": self.config.solver.edge_threshold,
            "config": self.config.to_dict(),
            "standardization_stats": self.standardization_stats.to_dict(),
            "weighted": {"normal": weights(self.weighted_normal), "attack": weights(self.weighted_attack)},
            "edges": {"normal": graph(self.g_normal), "attack": graph(self.g_attack)},
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CausalProfile":
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported profile format_version {doc.get('format_version')!r}")
        config = PipelineConfig.from_dict(doc["config"])
        names = tuple(doc["sensor_names"])
        k, p = len(names), config.lag

        def weights(d):
            inter = np.asarray(d["inter"], dtype=float).reshape(p * k, k)
            return WeightedDbn(np.asarray(d["intra"], dtype=float), inter, p, names)

        def graph(d):
            return BinaryDbn(frozenset(tuple(e) for e in d["intra"]),
                             frozenset(tuple(e) for e in d["inter"]), k, p)

        return cls(
            g_normal=graph(doc["edges"]["normal"]),
            g_attack=graph(doc["edges"]["attack"]),
            weighted_normal=weights(doc["weighted"]["normal"]),
            weighted_attack=weights(doc["weighted"]["attack"]),
            standardization_stats=StandardizationStats.from_dict(doc["standardization_stats"]),
            config=config,
            sensor_names=names,
        )


def inject_noise(segments: Sequence[np.ndarray], sigma_scale: float, seed: int = 0) -> list[np.ndarray]:
    """Add zero-mean Gaussian noise with per-sensor std ``sigma_scale * std(sensor)``.

    The sensor std is taken over all given segments jointly. ``sigma_scale == 0``
    returns unmodified copies.
    """
    if sigma_scale < 0:
        raise ValueError("sigma_scale must be >= 0")
    segments = [np.asarray(s, dtype=float) for s in segments]
    if sigma_scale == 0 or not segments:
        return [s.copy() for s in segments]
    sensor_std = np.vstack(segments).std(axis=0)
    rng = np.random.default_rng(seed)
    return [s + rng.standard_normal(s.shape) * (sigma_scale * sensor_std) for s in segments]


def _fit_graph(design, config: PipelineConfig, names):
    dbn, trace = fit_dbn(design, config.solver, names)
    return dbn, threshold(dbn, config.solver.edge_threshold), trace


def profile(train: SegmentedSeries, config: PipelineConfig = PipelineConfig()) -> CausalProfile:
    """Learn the Normal and Attack reference graphs from class-pure designs.

    Attack segments receive regularizing noise first. Both designs are
    standardized with statistics estimated on the normal design.
    """
    normal = train.of_class(0)
    attack = train.of_class(1)
    if not normal:
        raise MissingClass("training data has no normal (label 0) segments")
    if not attack:
        raise MissingClass("training data has no attack (label 1) segments")
    attack = inject_noise(attack, config.noise_sigma_scale, config.solver.seed)

    normal_design, stats = standardize(build_design(normal, config.lag), mode=config.standardization)
    attack_design, _ = standardize(build_design(attack, config.lag), stats)
    names = tuple(train.sensor_names) or tuple(f"x{i}" for i in range(train.n_sensors))
    w_normal, g_normal, tr_normal = _fit_graph(normal_design, config, names)
    w_attack, g_attack, tr_attack = _fit_graph(attack_design, config, names)
    log.info("profile: normal %d/%d edges, attack %d/%d edges",
             len(g_normal.intra_edges), len(g_normal.inter_edges),
             len(g_attack.intra_edges), len(g_attack.inter_edges))
    return CausalProfile(g_normal, g_attack, w_normal, w_attack, stats, config, names,
                         (tr_normal, tr_attack))


def segment_graph(segment: np.ndarray, prof: CausalProfile) -> BinaryDbn:
    """Infer the thresholded DBN of one segment, standardized the same way as training."""
    config = prof.config
    segment = np.asarray(segment, dtype=float)
    if segment.ndim != 2 or segment.shape[1] != prof.node_count:
        raise ShapeMismatch(f"segment has shape {segment.shape}, profile expects {prof.node_count} sensors")
    design = build_design([segment], config.lag)
    if config.restandardize_test:
        design, _ = standardize(design, mode=config.standardization)
    else:
        design, _ = standardize(design, prof.standardization_stats)
    return _fit_graph(design, config, prof.sensor_names)[1]


def decide(dist_attack: float, dist_normal: float) -> tuple[float, int]:
    """Margin score and label: attack only when strictly closer to the attack graph."""
    return dist_normal - dist_attack, int(dist_attack < dist_normal)


def score_segment(segment: np.ndarray, prof: CausalProfile, kind=None, index: int = 0) -> SegmentScore:
    config = prof.config
    kind = config.divergence if kind is None else DivergenceKind(kind)
    try:
        g_test = segment_graph(segment, prof)
    except DidNotConverge as exc:
        log.warning("segment %d: %s; reported as normal", index, exc)
        return SegmentScore(index, float("nan"), float("nan"), 0.0, 0, converged=False)
    opts = {"include_inter": config.include_inter_edges}
    if kind is DivergenceKind.SHD:
        opts["reversal_cost"] = config.shd_reversal_cost
    d_attack = divergence(kind, g_test, prof.g_attack, **opts)
    d_normal = divergence(kind, g_test, prof.g_normal, **opts)
    score, predicted = decide(d_attack, d_normal)
    return SegmentScore(index, d_attack, d_normal, score, predicted)


def default_workers() -> int:
    env = os.environ.get("CGAD_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def score_all(test: SegmentedSeries, prof: CausalProfile, kind=None,
              workers: Optional[int] = None, labeled: bool = True) -> DetectionReport:
    """Score every segment (optionally on a thread pool) and attach metrics.

    Metrics are computed only when ``labeled``; ROC-AUC needs both classes and
    PRC-AUC needs a positive, otherwise they are left as None.
    """
    workers = default_workers() if workers is None else max(1, workers)
    jobs = list(enumerate(test.segments))

    def run(job):
        i, seg = job
        return score_segment(seg, prof, kind, i)

    if workers == 1 or len(jobs) <= 1:
        rows = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, jobs))
    rows.sort(key=lambda r: r.segment_index)
    return build_report(rows, test.segment_labels if labeled else None)


def build_report(rows: Sequence[SegmentScore], labels=None) -> DetectionReport:
    rows = tuple(rows)
    ties = sum(1 for r in rows if r.converged and r.shd_attack == r.shd_normal)
    failed = sum(1 for r in rows if not r.converged)
    if labels is None:
        return DetectionReport(rows, tie_count=ties, nonconverged_count=failed)
    labels = tuple(int(v) for v in labels)
    preds = [r.predicted for r in rows]
    scores = [r.score for r in rows]
    notes = []
    f1 = f1_point_adjusted(labels, preds)
    if not any(labels) and not any(preds):
        notes.append("f1: no positive labels or predictions, reported as 1 by convention")
    auc = ap = None
    if 0 < sum(labels) < len(labels):
        auc = roc_auc(labels, scores)
    else:
        notes.append("roc_auc: undefined for single-class labels")
    if any(labels):
        ap = prc_auc(labels, scores)
    else:
        notes.append("prc_auc: undefined without positive labels")
    return DetectionReport(rows, labels, f1, auc, ap, ties, failed, tuple(notes))


def _num(x):
    return None if x is None or (isinstance(x, float) and np.isnan(x)) else x


def report_to_dict(report: DetectionReport, extra: Optional[dict] = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "per_segment": [
            {"segment_index": r.segment_index, "shd_attack": _num(r.shd_attack),
             "shd_normal": _num(r.shd_normal), "score": r.score,
             "predicted": r.predicted, "converged": r.converged}
            for r in report.per_segment
        ],
        "tie_count": report.tie_count,
        "nonconverged_count": report.nonconverged_count,
        "notes": list(report.notes),
    }
    if report.labels is not None:
        doc["labels"] = list(report.labels)
        doc["metrics"] = {"f1_point_adjusted": report.f1_point_adjusted,
                          "roc_auc": report.roc_auc, "prc_auc": report.prc_auc}
    if extra:
        doc.update(extra)
    return doc


def report_from_dict(doc: dict) -> DetectionReport:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported report format_version {doc.get('format_version')!r}")
    rows = tuple(
        SegmentScore(r["segment_index"],
                     float("nan") if r["shd_attack"] is None else r["shd_attack"],
                     float("nan") if r["shd_normal"] is None else r["shd_normal"],
                     r["score"], r["predicted"], r.get("converged", True))
        for r in doc["per_segment"])
    metrics = doc.get("metrics") or {}
    labels = tuple(doc["labels"]) if "labels" in doc else None
    return DetectionReport(rows, labels, metrics.get("f1_point_adjusted"), metrics.get("roc_auc"),
                           metrics.get("prc_auc"), doc.get("tie_count", 0),
                           doc.get("nonconverged_count", 0), tuple(doc.get("notes", ())))


def to_dot(graph: BinaryDbn, sensor_names: Sequence[str], name: str = "dbn") -> str:
    """Graphviz text: solid arrows for intra edges, dashed ``lag l`` arrows for inter edges."""
    lines = [f'digraph "{name}" {{']
    for idx, sensor in enumerate(sensor_names):
        lines.append(f'  n{idx} [label="{sensor}"];')
    for j, i in sorted(graph.intra_edges):
        lines.append(f"  n{j} -> n{i};")
    for j, ell, i in sorted(graph.inter_edges):
        lines.append(f'  n{j} -> n{i} [style=dashed, label="lag {ell}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def with_divergence(prof: CausalProfile, **changes) -> CausalProfile:
    """Copy of ``prof`` with scoring-time config fields replaced."""
    return replace(prof, config=replace(prof.config, **changes))
