"""Calibrated corpus generation: fixtures, fits, determinism, conformance."""

import pytest

from polaris.datagen import (
    CalibrationTarget,
    StageBand,
    default_targets,
    evaluation_targets,
    fit_target,
    generate_corpus,
    target_from_json,
    target_to_json,
)
from polaris.decomposition import decompose
from polaris.domain import MechanismKind, MilestoneKind
from polaris.errors import InfeasibleTargetError
from polaris.profiling import build_store
from polaris.trace_ingest import ingest_lines

M = MechanismKind


def by_mechanism(targets):
    return {t.mechanism: t for t in targets}


def test_default_targets_reference_values():
    targets = by_mechanism(default_targets())
    assert targets[M.BWP].amp_ratio == 328.5
    assert targets[M.BWP].median_phy == 6.25
    assert targets[M.CA].mean_phy == 1225.0
    assert targets[M.RR_LTE].rel_variability == 0.10
    assert targets[M.HO_LTE].amp_ratio == 1.0
    assert targets[M.BASELINE_LTE].rel_variability == 0.94


def test_default_counts_sum_to_corpus_size():
    assert sum(t.count for t in default_targets()) == 1600


def test_seed_determinism_byte_identical():
    a = generate_corpus(default_targets(), seed=9, scale=0.02)
    b = generate_corpus(default_targets(), seed=9, scale=0.02)
    assert a.lines == b.lines
    c = generate_corpus(default_targets(), seed=10, scale=0.02)
    assert c.lines != a.lines


def test_zero_variability_target_degenerates():
    target = CalibrationTarget(
        mechanism=M.HO_NR,
        count=40,
        amp_ratio=2.0,
        rel_variability=0.0,
        median_phy=10.0,
    )
    result = generate_corpus([target], seed=3)
    executions, report = ingest_lines(list(result.lines), mode="strict")
    assert report.executions_rejected == 0
    rrc = {round(decompose(ex).t_rrc_phy_ms, 9) for ex in executions}
    assert rrc == {20.0}  # every completion sample equals amp * median


def test_amp_below_one_is_reported_and_clamped():
    target = CalibrationTarget(
        mechanism=M.CA,
        count=30,
        amp_ratio=0.9,
        rel_variability=1.0,
        mean_phy=100.0,
    )
    result = generate_corpus([target], seed=3)
    assert any(
        n.field_name == "amp_ratio" and n.achievable == 1.0
        for n in result.infeasibilities
    )
    with pytest.raises(InfeasibleTargetError) as err:
        generate_corpus([target], seed=3, strict=True)
    assert err.value.code == "INFEASIBLE_TARGET"
    # clamped corpus still template-conformant with ratio exactly 1
    executions, _ = ingest_lines(list(result.lines), mode="strict")
    store = build_store([(ex.mechanism, decompose(ex)) for ex in executions], window=64, min_n=1)
    assert store.profiles[M.CA].amp_ratio == pytest.approx(1.0)


def test_unreachable_variability_reports_closest_achievable():
    # pinned mean/t95 fix the PHY spread; a tiny completion variability
    # cannot undo it
    target = CalibrationTarget(
        mechanism=M.HO_NR,
        count=30,
        amp_ratio=1.05,
        rel_variability=0.01,
        mean_phy=40.0,
        t95_phy=80.0,
    )
    result = generate_corpus([target], seed=3)
    notes = [n for n in result.infeasibilities if n.field_name == "rel_variability"]
    assert notes and notes[0].achievable > 0.01


def test_strict_template_conformance_and_counts():
    result = generate_corpus(default_targets(), seed=11, scale=0.05)
    executions, report = ingest_lines(list(result.lines), mode="strict")
    assert report.executions_rejected == 0
    assert report.executions_ok == sum(result.counts.values())
    per_mech = {}
    for ex in executions:
        per_mech[ex.mechanism] = per_mech.get(ex.mechanism, 0) + 1
    assert per_mech == result.counts


def test_calibration_statistics_small_scale():
    result = generate_corpus(default_targets(), seed=5, scale=2.0)
    executions, _ = ingest_lines(list(result.lines), mode="strict")
    store = build_store(
        [(ex.mechanism, decompose(ex)) for ex in executions], window=4096, min_n=1
    )
    targets = by_mechanism(default_targets())
    endc = store.profiles[M.ENDC]
    assert endc.amp_ratio == pytest.approx(targets[M.ENDC].amp_ratio, rel=0.05)
    assert endc.rel_variability == pytest.approx(
        targets[M.ENDC].rel_variability, rel=0.05
    )
    assert store.profiles[M.BWP].median_phy == pytest.approx(6.25, rel=0.02)


def test_devices_interleaved_but_ordered():
    result = generate_corpus(default_targets(), seed=4, scale=0.05)
    executions, _ = ingest_lines(list(result.lines), mode="strict")
    devices = {ex.device_id for ex in executions}
    assert len(devices) == 4


def test_evaluation_targets_encode_reduction_ratios():
    targets = by_mechanism(evaluation_targets())
    assert targets[M.BWP].mean_phy / targets[M.HO_NR].mean_phy == pytest.approx(0.149)
    assert targets[M.BWP].t95_phy / targets[M.HO_NR].t95_phy == pytest.approx(0.103)
    assert targets[M.ENDC].mean_phy / targets[M.HO_NR].mean_phy == pytest.approx(0.358)
    assert targets[M.ENDC].t95_phy / targets[M.HO_NR].t95_phy == pytest.approx(0.346)
    assert targets[M.RR_NR].t95_phy / targets[M.HO_NR].t95_phy == pytest.approx(1.748)


def test_target_json_round_trip():
    for target in default_targets():
        doc = target_to_json(target)
        assert target_from_json(doc) == target


def test_target_validation():
    with pytest.raises(ValueError):
        CalibrationTarget(M.BWP, count=0, amp_ratio=1.0, rel_variability=0.1, median_phy=1.0)
    with pytest.raises(ValueError):
        CalibrationTarget(M.BWP, count=1, amp_ratio=1.0, rel_variability=0.1)
    with pytest.raises(ValueError):
        # stage plan without a remainder sink
        CalibrationTarget(
            M.RR_NR,
            count=1,
            amp_ratio=2.0,
            rel_variability=0.1,
            median_phy=10.0,
            fixed_stages_ms=(
                StageBand(MilestoneKind.SIB1_ACQ, MilestoneKind.S_CRITERIA_PASS, 1.0, 2.0),
            ),
        )
    with pytest.raises(ValueError):
        fit_target(
            CalibrationTarget(
                M.BWP, count=1, amp_ratio=2.0, rel_variability=0.1,
                median_phy=10.0, t95_phy=5.0,
            )
        )


def test_fit_comonotone_construction_hits_targets():
    target = CalibrationTarget(
        mechanism=M.BASELINE_NR,
        count=1,
        amp_ratio=5.1,
        rel_variability=0.69,
        median_phy=103.4,
    )
    fit = fit_target(target)
    import math

    z75 = 0.6744897501960817
    median_phy = math.exp(fit.mu_phy)
    iqr_phy = median_phy * 2 * math.sinh(z75 * fit.sigma_phy)
    iqr_react = fit.median_react * 2 * math.sinh(z75 * fit.sigma_react)
    median_total = median_phy + fit.median_react
    assert median_total / median_phy == pytest.approx(5.1)
    assert (iqr_phy + iqr_react) / median_total == pytest.approx(0.69)
