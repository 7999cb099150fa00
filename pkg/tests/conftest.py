"""Shared fixtures: execution builders and the two session-scoped corpora."""

from __future__ import annotations

import time
from dataclasses import dataclass
from types import MappingProxyType

import pytest

from polaris.datagen import default_targets, evaluation_targets, generate_corpus
from polaris.decomposition import decompose
from polaris.domain import (
    MechanismKind,
    SteeringExecution,
    execution_template,
)
from polaris.profiling import ProfileStore, build_store, profile_from_samples
from polaris.trace_ingest import IngestReport, ingest_lines


def make_execution(
    mechanism: MechanismKind,
    t0: float = 0.0,
    t_react: float = 1.0,
    stage_durations: tuple[float, ...] | None = None,
    device: str = "default",
) -> SteeringExecution:
    template = execution_template(mechanism)
    n_stages = len(template) - 2
    if stage_durations is None:
        stage_durations = tuple(1.0 for _ in range(n_stages))
    assert len(stage_durations) == n_stages
    ts = [t0, t0 + t_react]
    for duration in stage_durations:
        ts.append(ts[-1] + duration)
    return SteeringExecution(
        mechanism=mechanism,
        t0_ms=ts[0],
        tf_ms=ts[-1],
        first_phy_ms=ts[1],
        milestones=tuple(zip(template, ts)),
        device_id=device,
    )


def make_store(
    samples: dict[MechanismKind, tuple[list[float], list[float]]],
    window: int = 4096,
    min_n: int = 1,
) -> ProfileStore:
    profiles = {
        mech: profile_from_samples(mech, phy, rrc)
        for mech, (phy, rrc) in samples.items()
    }
    return ProfileStore(MappingProxyType(profiles), window, min_n)


@dataclass(frozen=True)
class CalibrationRun:
    lines: tuple[str, ...]
    executions: list[SteeringExecution]
    report: IngestReport
    store: ProfileStore
    infeasibilities: tuple
    elapsed_s: float


@pytest.fixture(scope="session")
def calibration_run() -> CalibrationRun:
    """Full pipeline on the calibration fixture at x20 counts, timed."""
    start = time.perf_counter()
    result = generate_corpus(default_targets(), seed=42, scale=20.0)
    executions, report = ingest_lines(list(result.lines), mode="strict")
    pairs = [(ex.mechanism, decompose(ex)) for ex in executions]
    store = build_store(pairs, window=32768, min_n=5)
    elapsed = time.perf_counter() - start
    return CalibrationRun(
        lines=result.lines,
        executions=executions,
        report=report,
        store=store,
        infeasibilities=result.infeasibilities,
        elapsed_s=elapsed,
    )


@pytest.fixture(scope="session")
def evaluation_store() -> ProfileStore:
    """Profiles from the policy-comparison fixture."""
    result = generate_corpus(evaluation_targets(), seed=7, scale=1.0)
    executions, report = ingest_lines(list(result.lines), mode="strict")
    assert report.executions_rejected == 0
    pairs = [(ex.mechanism, decompose(ex)) for ex in executions]
    return build_store(pairs, window=4096, min_n=5)
