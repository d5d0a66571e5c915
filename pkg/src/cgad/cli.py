"""Batch command line: ``cgad synth | profile | score | evaluate``.

Configuration precedence is command-line flags, then ``--config`` file (JSON),
then built-in defaults. Exit codes: 0 success, 2 input or configuration error,
3 solver failure. Every failure writes one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .core import CgadError, DidNotConverge
from .design import segment
from .divergence import DivergenceKind
from .evaluation import f1_point_adjusted, prc_auc, roc_auc
from .pipeline import (CausalProfile, PipelineConfig, build_report, profile, report_from_dict,
                       report_to_dict, score_all, to_dot)
from .structure import SolverConfig
from .synth import GeneratorSpec, two_regime_dataset

log = logging.getLogger("cgad")

EXIT_INPUT = 2
EXIT_SOLVER = 3

# lag orders reported as best for the public ICS benchmarks
LAG_PRESETS = {"swat": 4, "wadi": 3, "te": 4, "smd": 1}


class ConfigError(CgadError, ValueError):
    pass


class MetricMismatch(CgadError, ValueError):
    pass


@dataclass
class RunConfig:
    segment_len: int = 900
    lag: int = 1
    lambda_w: float = 0.01
    lambda_a: float = 0.01
    edge_threshold: float = 0.1
    noise_sigma_scale: float = 0.01
    divergence: str = "shd"
    shd_reversal_cost: int = 2
    include_inter_edges: bool = True
    standardization: str = "pooled"
    restandardize_test: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.segment_len < 2:
            raise ConfigError("segment_len must be >= 2")
        if self.lag < 0 or self.lag >= self.segment_len:
            raise ConfigError("lag must satisfy 0 <= lag < segment_len")
        for name in ("lambda_w", "lambda_a", "edge_threshold", "noise_sigma_scale"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        try:
            DivergenceKind(self.divergence)
        except ValueError:
            raise ConfigError(f"unknown divergence {self.divergence!r}") from None
        if self.shd_reversal_cost not in (1, 2):
            raise ConfigError("shd_reversal_cost must be 1 or 2")
        if self.standardization not in ("pooled", "column"):
            raise ConfigError(f"unknown standardization {self.standardization!r}")

    def pipeline(self) -> PipelineConfig:
        solver = SolverConfig(lambda_w=self.lambda_w, lambda_a=self.lambda_a,
                              edge_threshold=self.edge_threshold, seed=self.seed)
        return PipelineConfig(solver=solver, lag=self.lag, segment_len=self.segment_len,
                              noise_sigma_scale=self.noise_sigma_scale,
                              divergence=DivergenceKind(self.divergence),
                              include_inter_edges=self.include_inter_edges,
                              shd_reversal_cost=self.shd_reversal_cost,
                              standardization=self.standardization,
                              restandardize_test=self.restandardize_test)


_RUN_FIELDS = {f.name: f for f in fields(RunConfig)}


def load_run_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(doc) - set(_RUN_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        values.update(doc)
    if getattr(args, "preset", None):
        values["lag"] = LAG_PRESETS[args.preset]
    for name in _RUN_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    cfg = RunConfig(**values)
    for name, f in _RUN_FIELDS.items():
        value = getattr(cfg, name)
        kind = {"int": int, "float": (int, float), "bool": bool, "str": str}[f.type]
        if isinstance(value, bool) and f.type != "bool" or not isinstance(value, kind):
            raise ConfigError(f"{name} has wrong type: {value!r}")
    cfg.validate()
    return cfg


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig keys")
    p.add_argument("--preset", choices=sorted(LAG_PRESETS), help="lag preset per dataset")
    p.add_argument("--segment-len", dest="segment_len", type=int, help="samples per segment (default 900)")
    p.add_argument("--lag", type=int, help="lag order p (default 1; 0 = static DAG)")
    p.add_argument("--lambda-w", dest="lambda_w", type=float, help="intra-slice L1 weight (default 0.01)")
    p.add_argument("--lambda-a", dest="lambda_a", type=float, help="inter-slice L1 weight (default 0.01)")
    p.add_argument("--edge-threshold", dest="edge_threshold", type=float, help="default 0.1")
    p.add_argument("--noise-sigma-scale", dest="noise_sigma_scale", type=float,
                   help="attack-data noise std as a fraction of sensor std (default 0.01)")
    p.add_argument("--divergence", choices=[k.value for k in DivergenceKind])
    p.add_argument("--shd-reversal-cost", dest="shd_reversal_cost", type=int, choices=(1, 2))
    p.add_argument("--intra-only", dest="include_inter_edges", action="store_const", const=False,
                   help="ignore lagged edges in the divergence")
    p.add_argument("--standardization", choices=("pooled", "column"))
    p.add_argument("--restandardize-test", dest="restandardize_test", action="store_const", const=True)
    p.add_argument("--seed", type=int)


def _write_json(path, doc) -> None:
    io.write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def cmd_synth(args) -> int:
    spec = GeneratorSpec(node_count=args.nodes, lag=args.lag, edge_density=args.density,
                         weight_range=(args.weight_lo, args.weight_hi), noise_std=args.noise_std,
                         seed=args.seed, perturbation=args.perturbation, rewire=args.rewire)
    m = args.segment_len
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.SeedSequence(args.seed)
    train_seed, test_seed = (int(s.generate_state(1)[0]) for s in rng.spawn(2))
    train = two_regime_dataset(spec, args.train_normal * m, args.train_attack * m, m, train_seed)
    test = two_regime_dataset(spec, args.test_normal * m, args.test_attack * m, m, test_seed)
    io.write_series(out / "train.csv", train.series)
    io.write_series(out / "test.csv", test.series)

    def edges(dbn):
        k = dbn.node_count
        inter = [[int(r % k), int(r // k) + 1, int(i)] for r, i in zip(*np.nonzero(dbn.inter))]
        return {"intra": [[int(j), int(i)] for j, i in zip(*np.nonzero(dbn.intra))],
                "inter": sorted(inter),
                "intra_weights": dbn.intra.tolist(), "inter_weights": dbn.inter.tolist()}

    _write_json(out / "ground_truth.json", {
        "format_version": 1,
        "sensor_names": list(train.normal_dbn.sensor_names),
        "lag": spec.lag,
        "segment_len": m,
        "normal": edges(train.normal_dbn),
        "attack": edges(train.attack_dbn),
    })
    print(f"wrote {out / 'train.csv'}, {out / 'test.csv'}, {out / 'ground_truth.json'}")
    return 0


def cmd_profile(args) -> int:
    cfg = load_run_config(args)
    series = io.read_series(args.train_csv, require_labels=True)
    segs = segment(series, cfg.segment_len)
    prof = profile(segs, cfg.pipeline())
    out = Path(args.out)
    io.write_text(out, prof.to_json() + "\n")
    stem = out.with_suffix("")
    io.write_text(f"{stem}_normal.dot", to_dot(prof.g_normal, prof.sensor_names, "normal"))
    io.write_text(f"{stem}_attack.dot", to_dot(prof.g_attack, prof.sensor_names, "attack"))
    for name, tr in zip(("normal", "attack"), prof.traces):
        last = tr.steps[-1]
        print(f"{name}: outer={len(tr.steps)} inner={sum(s.inner_iters for s in tr.steps)} "
              f"h={last.h:.2e} rho={last.rho:.1e}")
    print(f"normal graph: {len(prof.g_normal.intra_edges)} intra, {len(prof.g_normal.inter_edges)} inter edges")
    print(f"attack graph: {len(prof.g_attack.intra_edges)} intra, {len(prof.g_attack.inter_edges)} inter edges")
    return 0


def cmd_score(args) -> int:
    prof = CausalProfile.from_json(Path(args.profile).read_text(encoding="utf-8"))
    series = io.read_series(args.test_csv)
    if series.sensor_names != prof.sensor_names:
        raise ConfigError(f"sensor mismatch: profile has {len(prof.sensor_names)} sensors "
                          f"{list(prof.sensor_names)}, CSV has {list(series.sensor_names)}")
    overrides = {}
    if args.divergence:
        overrides["divergence"] = DivergenceKind(args.divergence)
    if args.shd_reversal_cost:
        overrides["shd_reversal_cost"] = args.shd_reversal_cost
    if args.include_inter_edges is not None:
        overrides["include_inter_edges"] = args.include_inter_edges
    if overrides:
        prof = replace(prof, config=replace(prof.config, **overrides))
    segs = segment(series, prof.config.segment_len)
    labeled = series.point_labels is not None
    report = score_all(segs, prof, workers=args.workers, labeled=labeled)
    doc = report_to_dict(report, {"sensor_names": list(prof.sensor_names),
                                  "config": prof.config.to_dict()})
    _write_json(args.out, doc)
    print(f"scored {len(report.per_segment)} segments, {sum(report.predictions)} flagged as attack")
    if labeled:
        _print_metrics(report.f1_point_adjusted, report.roc_auc, report.prc_auc)
    return 0


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def _print_metrics(f1, auc, ap) -> None:
    print(f"{'metric':<20}{'value':>10}")
    print(f"{'f1_point_adjusted':<20}{_fmt(f1):>10}")
    print(f"{'roc_auc':<20}{_fmt(auc):>10}")
    print(f"{'prc_auc':<20}{_fmt(ap):>10}")


def cmd_evaluate(args) -> int:
    try:
        doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
        report = report_from_dict(doc)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"unreadable report: {exc}") from None
    if report.labels is None:
        raise ConfigError("report has no labels; cannot evaluate")
    fresh = build_report(report.per_segment, report.labels)
    stored = (report.f1_point_adjusted, report.roc_auc, report.prc_auc)
    recomputed = (fresh.f1_point_adjusted, fresh.roc_auc, fresh.prc_auc)
    _print_metrics(*recomputed)
    if stored != recomputed:
        raise MetricMismatch(f"metric mismatch: stored {stored}, recomputed {recomputed}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgad",
        description="Causal-graph anomaly detection for multivariate sensor data. "
                    "Config precedence: CLI flags > --config file > defaults.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic two-regime train/test dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--nodes", type=int, default=8)
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--weight-lo", type=float, default=0.5)
    p.add_argument("--weight-hi", type=float, default=2.0)
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--perturbation", type=int, default=4, help="edges rewired between regimes")
    p.add_argument("--rewire", choices=("both", "intra", "inter"), default="both")
    p.add_argument("--segment-len", type=int, default=200)
    p.add_argument("--train-normal", type=int, default=20, help="normal training segments")
    p.add_argument("--train-attack", type=int, default=20, help="attack training segments")
    p.add_argument("--test-normal", type=int, default=20)
    p.add_argument("--test-attack", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("profile", help="learn Normal/Attack reference graphs from labeled CSV")
    p.add_argument("train_csv")
    p.add_argument("--out", default="profile.json")
    _add_run_flags(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("score", help="score test segments against a profile")
    p.add_argument("test_csv")
    p.add_argument("profile")
    p.add_argument("--out", default="report.json")
    p.add_argument("--workers", type=int, default=None,
                   help="scoring threads (default: $CGAD_WORKERS or CPU count)")
    p.add_argument("--divergence", choices=[k.value for k in DivergenceKind])
    p.add_argument("--shd-reversal-cost", dest="shd_reversal_cost", type=int, choices=(1, 2))
    p.add_argument("--intra-only", dest="include_inter_edges", action="store_const", const=False)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="print and cross-check the metrics stored in a report")
    p.add_argument("report")
    p.set_defaults(func=cmd_evaluate)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DidNotConverge as exc:
        return _fail(EXIT_SOLVER, exc)
    except (CgadError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)


if __name__ == "__main__":
    sys.exit(main())
