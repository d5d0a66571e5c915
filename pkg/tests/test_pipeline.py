import json

import numpy as np
import pytest

from cgad.core import BinaryDbn, DidNotConverge, MissingClass, SegmentedSeries
from cgad.divergence import DivergenceKind, shd
from cgad.pipeline import (CausalProfile, PipelineConfig, build_report, decide, inject_noise,
                           profile, report_from_dict, report_to_dict, score_all, score_segment,
                           to_dot)
from cgad.structure import SolverConfig
from cgad.synth import GeneratorSpec, two_regime_dataset
from oracles import edge_f1
from cgad.structure import threshold

M = 200
FAST = PipelineConfig(solver=SolverConfig(lambda_w=0.01, lambda_a=0.01), lag=1, segment_len=M)


@pytest.fixture(scope="module")
def regimes():
    spec = GeneratorSpec(node_count=8, lag=1, seed=2, perturbation=4)
    train = two_regime_dataset(spec, 20 * M, 20 * M, M, sim_seed=11)
    test = two_regime_dataset(spec, 6 * M, 6 * M, M, sim_seed=12)
    return train, test


@pytest.fixture(scope="module")
def fitted(regimes):
    return profile(regimes[0].segmented, FAST)


def test_inject_noise_identity_and_constant_column():
    rng = np.random.default_rng(0)
    segs = [rng.normal(size=(20, 3)) for _ in range(3)]
    same = inject_noise(segs, 0.0, seed=1)
    assert all(np.array_equal(a, b) for a, b in zip(same, segs))
    for s in segs:
        s[:, 1] = 5.0
    noisy = inject_noise(segs, 0.01, seed=1)
    assert all(np.array_equal(n[:, 1], s[:, 1]) for n, s in zip(noisy, segs))
    assert not np.array_equal(noisy[0][:, 0], segs[0][:, 0])


def test_inject_noise_statistics():
    segs = [np.random.default_rng(3).normal(size=(1000, 100))]
    noisy = inject_noise(segs, 0.01, seed=4)
    added = (noisy[0] - segs[0]) / (0.01 * segs[0].std(axis=0))
    n = added.size
    assert abs(added.mean()) <= 3 / np.sqrt(n)
    again = inject_noise(segs, 0.01, seed=4)
    assert np.array_equal(again[0], noisy[0])


def test_decide_rule():
    assert decide(3, 7) == (4, 1)
    assert decide(5, 5) == (0, 0)
    for c in (0.5, 2.0, 17.0):
        assert decide(3 * c, 7 * c)[1] == 1


def test_missing_class():
    seg = SegmentedSeries(tuple(np.zeros((10, 2)) + i for i in range(3)), (0, 0, 0))
    with pytest.raises(MissingClass):
        profile(seg, PipelineConfig(segment_len=10))


def test_profile_recovers_both_regimes(regimes, fitted):
    train = regimes[0]
    gn, ga = threshold(train.normal_dbn, 0), threshold(train.attack_dbn, 0)
    assert edge_f1(fitted.g_normal.intra_edges | fitted.g_normal.inter_edges,
                   gn.intra_edges | gn.inter_edges) >= 0.9
    assert edge_f1(fitted.g_attack.intra_edges | fitted.g_attack.inter_edges,
                   ga.intra_edges | ga.inter_edges) >= 0.9


def test_identical_regimes_give_close_references():
    spec = GeneratorSpec(node_count=8, lag=1, seed=2, perturbation=0)
    train = two_regime_dataset(spec, 20 * M, 20 * M, M, sim_seed=11)
    prof = profile(train.segmented, FAST)
    assert shd(prof.g_normal, prof.g_attack) <= 2


def test_score_all_detects(regimes, fitted):
    report = score_all(regimes[1].segmented, fitted, workers=1)
    assert len(report.per_segment) == 12
    assert report.f1_point_adjusted >= 0.9
    assert report.roc_auc >= 0.95
    attack_idx = [i for i, y in enumerate(regimes[1].segmented.segment_labels) if y]
    assert report.per_segment[attack_idx[0]].predicted == 1


@pytest.mark.parametrize("kind", list(DivergenceKind))
def test_other_divergences_follow_same_rule(regimes, fitted, kind):
    row = score_segment(regimes[1].segmented.segments[0], fitted, kind)
    assert row.predicted == int(row.shd_attack < row.shd_normal)
    assert row.score == row.shd_normal - row.shd_attack


def test_single_segment_report(regimes, fitted):
    one = SegmentedSeries(regimes[1].segmented.segments[:1], (0,))
    report = score_all(one, fitted, workers=1)
    assert len(report.per_segment) == 1
    assert report.roc_auc is None and report.prc_auc is None


def test_parallel_matches_serial(regimes, fitted):
    serial = score_all(regimes[1].segmented, fitted, workers=1)
    threaded = score_all(regimes[1].segmented, fitted, workers=4)
    assert report_to_dict(serial) == report_to_dict(threaded)


def test_non_convergent_segment_is_fail_safe(regimes, fitted):
    from dataclasses import replace
    starved = replace(fitted, config=replace(fitted.config, solver=fitted.config.solver.with_(
        max_outer_iters=1, rho_max=10.0)))
    row = score_segment(regimes[1].segmented.segments[8], starved)
    assert not row.converged and row.predicted == 0
    report = build_report([row], [1])
    assert report.nonconverged_count == 1


def test_zero_positive_convention():
    from cgad.core import SegmentScore
    rows = [SegmentScore(i, 3.0, 2.0, -1.0, 0) for i in range(3)]
    report = build_report(rows, [0, 0, 0])
    assert report.f1_point_adjusted == 1.0
    assert any("convention" in n for n in report.notes)


def test_profile_json_round_trip(fitted):
    text = fitted.to_json()
    doc = json.loads(text)
    assert doc["format_version"] == 1
    back = CausalProfile.from_json(text)
    assert back.g_normal == fitted.g_normal and back.g_attack == fitted.g_attack
    assert np.array_equal(back.weighted_normal.inter, fitted.weighted_normal.inter)
    assert back.config == fitted.config
    assert back.to_json() == text


def test_report_round_trip(regimes, fitted):
    report = score_all(regimes[1].segmented, fitted, workers=1)
    back = report_from_dict(json.loads(json.dumps(report_to_dict(report))))
    assert report_to_dict(back) == report_to_dict(report)


def test_dot_export():
    g = BinaryDbn(frozenset({(0, 1)}), frozenset({(1, 2, 0)}), 2, 2)
    dot = to_dot(g, ["p", "q"], "normal")
    assert 'n0 [label="p"]' in dot
    assert "n0 -> n1;" in dot
    assert 'n1 -> n0 [style=dashed, label="lag 2"];' in dot
