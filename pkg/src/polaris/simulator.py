"""Deterministic closed-loop steering simulator.

Spectrum-availability events arrive in order; for each one the configured
policy picks a mechanism under the event's scenario, an execution latency pair
is drawn by bootstrap resampling from that mechanism's profile buffers, the
draw is logged as telemetry, and every `refresh_period` successful activations
the profile store refreshes with the accumulated samples.

Headline latency is the PHY-centric view; the paired completion-view sample is
logged alongside it. Identical inputs and seed produce byte-identical
telemetry. A run can be replayed from its own log (bypassing the policy) and
reproduces the same latency sequence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import (
    LatencyDecomposition,
    MechanismKind,
    PolicyParams,
    Scenario,
    execution_template,
)
from .errors import (
    EmptyLogError,
    FixedMechanismUnavailableError,
    NoFeasibleMechanismError,
)
from .policy import BaselineKind, PolicyDecision, baseline_select, select
from .profiling import ProfileStore, exceedance_at, percentile, refresh

DEFAULT_REFRESH_PERIOD = 50
DEFAULT_KPM_PERIOD = 25
EXCEEDANCE_THRESHOLD_MS = 50.0

POLICY_KINDS = ("polaris",) + tuple(k.value for k in BaselineKind)


@dataclass(frozen=True)
class SpectrumEvent:
    """One spectrum activation: when it happens, where, and which mechanisms
    are feasible for it."""

    time_ms: float
    carrier_id: str
    scenario: Scenario


class TelemetryKind(str, Enum):
    KPM_REPORT = "KPM_REPORT"
    CONTROL_ACTION = "CONTROL_ACTION"
    EXEC_COMPLETE = "EXEC_COMPLETE"
    ACTION_FAILED = "ACTION_FAILED"


@dataclass(frozen=True)
class TelemetryRecord:
    time_ms: float
    kind: TelemetryKind
    activation: int | None = None
    mechanism: MechanismKind | None = None
    sampled_latency_ms: float | None = None
    sampled_rrc_phy_ms: float | None = None
    error: str | None = None
    decision: dict | None = None
    profiles: dict | None = None

    def to_dict(self) -> dict:
        doc = {"time_ms": self.time_ms, "kind": self.kind.value}
        if self.activation is not None:
            doc["activation"] = self.activation
        if self.mechanism is not None:
            doc["mechanism"] = self.mechanism.value
        if self.sampled_latency_ms is not None:
            doc["sampled_latency_ms"] = self.sampled_latency_ms
        if self.sampled_rrc_phy_ms is not None:
            doc["sampled_rrc_phy_ms"] = self.sampled_rrc_phy_ms
        if self.error is not None:
            doc["error"] = self.error
        if self.decision is not None:
            doc["decision"] = self.decision
        if self.profiles is not None:
            doc["profiles"] = self.profiles
        return doc


@dataclass(frozen=True)
class PolicySpec:
    """Which policy drives the loop: the disruption-score rule with its
    weights, or one of the static baselines."""

    kind: str
    params: PolicyParams | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"policy kind must be one of {POLICY_KINDS}")
        if self.kind == "polaris" and self.params is None:
            raise ValueError("polaris policy requires params")

    def label(self) -> str:
        if self.kind == "polaris":
            return (
                f"polaris(tail={self.params.tail_weight:g},"
                f"var={self.params.variability_weight:g})"
            )
        return self.kind


@dataclass(frozen=True)
class SimResult:
    records: tuple[TelemetryRecord, ...]
    final_store: ProfileStore
    latencies_phy: tuple[float, ...]
    latencies_rrc_phy: tuple[float, ...]
    failures: int


def _profile_summary(store: ProfileStore) -> dict:
    return {
        m.value: {
            "n": p.n,
            "mean_phy_ms": p.mean_phy,
            "t95_phy_ms": p.t95_phy,
            "rel_variability": p.rel_variability,
        }
        for m, p in sorted(store.profiles.items(), key=lambda kv: kv[0].value)
    }


def _resampled_decomposition(
    mechanism: MechanismKind, phy: float, rrc: float
) -> LatencyDecomposition:
    template = execution_template(mechanism)
    t_react = rrc - phy
    return LatencyDecomposition(
        t_rrc_phy_ms=phy + t_react,
        t_phy_ms=phy,
        t_react_ms=t_react,
        stages=(((template[1], template[-1]), phy),),
    )


def run(
    events: list[SpectrumEvent],
    store0: ProfileStore,
    policy: PolicySpec,
    seed: int,
    refresh_period: int = DEFAULT_REFRESH_PERIOD,
    kpm_period: int = DEFAULT_KPM_PERIOD,
    normalize_over: str = "scenario",
    decisions_override: list[tuple[MechanismKind | None, str | None]] | None = None,
) -> SimResult:
    """Run the control loop over an event stream.

    `decisions_override` replays a previous run's per-activation outcomes
    (mechanism, or None with the failure code) instead of consulting the
    policy; everything else, including the bootstrap draws, is identical.
    """
    last_t = None
    for ev in events:
        if last_t is not None and ev.time_ms < last_t:
            raise ValueError("events must be ordered by time_ms")
        last_t = ev.time_ms
    if decisions_override is not None and len(decisions_override) != len(events):
        raise ValueError("decision override length does not match events")

    rng = np.random.default_rng(seed)
    store = store0
    records: list[TelemetryRecord] = []
    latencies_phy: list[float] = []
    latencies_rrc: list[float] = []
    batch: list[tuple[MechanismKind, LatencyDecomposition]] = []
    successes = 0
    failures = 0

    for index, event in enumerate(events):
        if kpm_period > 0 and index % kpm_period == 0:
            records.append(
                TelemetryRecord(
                    time_ms=event.time_ms,
                    kind=TelemetryKind.KPM_REPORT,
                    profiles=_profile_summary(store),
                )
            )

        if decisions_override is not None:
            mechanism, error = decisions_override[index]
            if mechanism is None:
                records.append(
                    TelemetryRecord(
                        time_ms=event.time_ms,
                        kind=TelemetryKind.ACTION_FAILED,
                        activation=index,
                        error=error,
                    )
                )
                failures += 1
                continue
            decision_doc = {"rule": "replay", "selected": mechanism.value}
        else:
            try:
                decision = _decide(store, event.scenario, policy, normalize_over)
            except (NoFeasibleMechanismError, FixedMechanismUnavailableError) as exc:
                records.append(
                    TelemetryRecord(
                        time_ms=event.time_ms,
                        kind=TelemetryKind.ACTION_FAILED,
                        activation=index,
                        error=exc.code,
                    )
                )
                failures += 1
                continue
            mechanism = decision.selected
            decision_doc = decision.to_dict()

        records.append(
            TelemetryRecord(
                time_ms=event.time_ms,
                kind=TelemetryKind.CONTROL_ACTION,
                activation=index,
                mechanism=mechanism,
                decision=decision_doc,
            )
        )
        profile = store.profiles[mechanism]
        draw = int(rng.integers(0, profile.n))
        phy = profile.samples_phy[draw]
        rrc = profile.samples_rrc_phy[draw]
        records.append(
            TelemetryRecord(
                time_ms=event.time_ms,
                kind=TelemetryKind.EXEC_COMPLETE,
                activation=index,
                mechanism=mechanism,
                sampled_latency_ms=phy,
                sampled_rrc_phy_ms=rrc,
            )
        )
        latencies_phy.append(phy)
        latencies_rrc.append(rrc)
        batch.append((mechanism, _resampled_decomposition(mechanism, phy, rrc)))
        successes += 1
        if refresh_period > 0 and successes % refresh_period == 0:
            store = refresh(store, batch)
            batch = []

    return SimResult(
        records=tuple(records),
        final_store=store,
        latencies_phy=tuple(latencies_phy),
        latencies_rrc_phy=tuple(latencies_rrc),
        failures=failures,
    )


def _decide(
    store: ProfileStore, scenario: Scenario, policy: PolicySpec, normalize_over: str
) -> PolicyDecision:
    if policy.kind == "polaris":
        return select(store, scenario, policy.params, normalize_over)
    return baseline_select(store, scenario, BaselineKind(policy.kind))


def replay(
    events: list[SpectrumEvent],
    store0: ProfileStore,
    records: tuple[TelemetryRecord, ...],
    seed: int,
    refresh_period: int = DEFAULT_REFRESH_PERIOD,
    kpm_period: int = DEFAULT_KPM_PERIOD,
) -> SimResult:
    """Re-run a logged session from its recorded decisions."""
    outcomes: list[tuple[MechanismKind | None, str | None]] = []
    for record in records:
        if record.kind is TelemetryKind.CONTROL_ACTION:
            outcomes.append((record.mechanism, None))
        elif record.kind is TelemetryKind.ACTION_FAILED:
            outcomes.append((None, record.error))
    return run(
        events,
        store0,
        PolicySpec(kind="min_mean"),  # unused under override
        seed,
        refresh_period=refresh_period,
        kpm_period=kpm_period,
        decisions_override=outcomes,
    )


def summarize_latencies(latencies) -> dict:
    vals = list(latencies)
    if not vals:
        raise EmptyLogError("no successful activations")
    return {
        "n": len(vals),
        "mean_ms": math.fsum(vals) / len(vals),
        "t95_ms": percentile(vals, 0.95),
        "exceedance_50ms": exceedance_at(vals, EXCEEDANCE_THRESHOLD_MS),
    }


def evaluate(latencies_a, latencies_b) -> dict:
    """Compare a policy's latencies (a) against a baseline's (b)."""
    a = list(latencies_a)
    b = list(latencies_b)
    if not a or not b:
        raise EmptyLogError("cannot evaluate an empty latency log")
    mean_a = math.fsum(a) / len(a)
    mean_b = math.fsum(b) / len(b)
    t95_a = percentile(a, 0.95)
    t95_b = percentile(b, 0.95)
    return {
        "mean_reduction": (mean_b - mean_a) / mean_b,
        "t95_reduction": (t95_b - t95_a) / t95_b,
        "exceedance_50ms_a": exceedance_at(a, EXCEEDANCE_THRESHOLD_MS),
        "exceedance_50ms_b": exceedance_at(b, EXCEEDANCE_THRESHOLD_MS),
    }


def telemetry_to_json_lines(records) -> list[str]:
    return [json.dumps(r.to_dict(), sort_keys=True) for r in records]
