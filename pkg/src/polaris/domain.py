"""Core vocabulary: steering mechanisms, modem milestones, executions and profiles.

All types are immutable value objects; they validate their own invariants at
construction time and are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Rat(str, Enum):
    NR = "NR"
    LTE = "LTE"
    DUAL = "DUAL"


class Family(str, Enum):
    BWP = "BWP"
    CA = "CA"
    ENDC = "ENDC"
    HO = "HO"
    RR = "RR"
    BASELINE = "BASELINE"


class MechanismKind(str, Enum):
    """UE steering mechanisms, plus the two initial-connection reference procedures."""

    BWP = "BWP"
    CA = "CA"
    ENDC = "ENDC"
    HO_NR = "HO_NR"
    HO_LTE = "HO_LTE"
    RR_NR = "RR_NR"
    RR_LTE = "RR_LTE"
    BASELINE_NR = "BASELINE_NR"
    BASELINE_LTE = "BASELINE_LTE"

    @property
    def rat(self) -> Rat:
        return _MECHANISM_TRAITS[self][0]

    @property
    def family(self) -> Family:
        return _MECHANISM_TRAITS[self][1]

    @property
    def selectable(self) -> bool:
        """Baseline connection procedures are profiled but never chosen by a policy."""
        return self.family is not Family.BASELINE


_MECHANISM_TRAITS: dict[MechanismKind, tuple[Rat, Family]] = {
    MechanismKind.BWP: (Rat.NR, Family.BWP),
    MechanismKind.CA: (Rat.NR, Family.CA),
    MechanismKind.ENDC: (Rat.DUAL, Family.ENDC),
    MechanismKind.HO_NR: (Rat.NR, Family.HO),
    MechanismKind.HO_LTE: (Rat.LTE, Family.HO),
    MechanismKind.RR_NR: (Rat.NR, Family.RR),
    MechanismKind.RR_LTE: (Rat.LTE, Family.RR),
    MechanismKind.BASELINE_NR: (Rat.NR, Family.BASELINE),
    MechanismKind.BASELINE_LTE: (Rat.LTE, Family.BASELINE),
}

SELECTABLE_MECHANISMS: tuple[MechanismKind, ...] = tuple(
    m for m in MechanismKind if m.selectable
)


class Layer(str, Enum):
    ML1 = "ML1"
    LL1 = "LL1"
    L2 = "L2"
    RRC = "RRC"


class MilestoneKind(str, Enum):
    """Closed vocabulary of observable trace milestones."""

    RRC_TRIGGER = "RRC_TRIGGER"
    SSB_DETECT = "SSB_DETECT"
    PBCH_MIB_DECODE = "PBCH_MIB_DECODE"
    SIB1_ACQ = "SIB1_ACQ"
    PDCCH_DECODE = "PDCCH_DECODE"
    S_CRITERIA_PASS = "S_CRITERIA_PASS"
    CONFIG_START = "CONFIG_START"
    BWP_APPLY = "BWP_APPLY"
    CONFIG_COMPLETE = "CONFIG_COMPLETE"
    SCELL_CONFIG = "SCELL_CONFIG"
    SCC_CONFIG = "SCC_CONFIG"
    SCC_ACTIVATE = "SCC_ACTIVATE"
    SCELL_MEAS = "SCELL_MEAS"
    NR_SYNC_ACQ = "NR_SYNC_ACQ"
    NR_RRC_RECONF = "NR_RRC_RECONF"
    NR_CARRIER_ACT = "NR_CARRIER_ACT"
    NR_MEAS_CONFIRM = "NR_MEAS_CONFIRM"
    HO_START = "HO_START"
    TARGET_SYNC = "TARGET_SYNC"
    SCHED_RESUME = "SCHED_RESUME"

    @property
    def layer(self) -> Layer:
        return _MILESTONE_LAYERS[self]


_MILESTONE_LAYERS: dict[MilestoneKind, Layer] = {
    MilestoneKind.RRC_TRIGGER: Layer.RRC,
    # cell search, sync acquisition, measurements and camping checks
    MilestoneKind.SSB_DETECT: Layer.ML1,
    MilestoneKind.S_CRITERIA_PASS: Layer.ML1,
    MilestoneKind.SCELL_MEAS: Layer.ML1,
    MilestoneKind.NR_SYNC_ACQ: Layer.ML1,
    MilestoneKind.TARGET_SYNC: Layer.ML1,
    MilestoneKind.NR_MEAS_CONFIRM: Layer.ML1,
    # control-channel decoding and scheduling
    MilestoneKind.PBCH_MIB_DECODE: Layer.LL1,
    MilestoneKind.SIB1_ACQ: Layer.LL1,
    MilestoneKind.PDCCH_DECODE: Layer.LL1,
    MilestoneKind.SCHED_RESUME: Layer.LL1,
    # MAC-level configuration and activation
    MilestoneKind.CONFIG_START: Layer.L2,
    MilestoneKind.BWP_APPLY: Layer.L2,
    MilestoneKind.CONFIG_COMPLETE: Layer.L2,
    MilestoneKind.SCELL_CONFIG: Layer.L2,
    MilestoneKind.SCC_CONFIG: Layer.L2,
    MilestoneKind.SCC_ACTIVATE: Layer.L2,
    MilestoneKind.NR_RRC_RECONF: Layer.L2,
    MilestoneKind.NR_CARRIER_ACT: Layer.L2,
    MilestoneKind.HO_START: Layer.L2,
}


_TEMPLATES: dict[MechanismKind, tuple[MilestoneKind, ...]] = {
    MechanismKind.BWP: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.CONFIG_START,
        MilestoneKind.BWP_APPLY,
        MilestoneKind.CONFIG_COMPLETE,
    ),
    MechanismKind.CA: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.SCELL_CONFIG,
        MilestoneKind.SCC_CONFIG,
        MilestoneKind.SCC_ACTIVATE,
        MilestoneKind.SCELL_MEAS,
    ),
    MechanismKind.ENDC: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.NR_SYNC_ACQ,
        MilestoneKind.NR_RRC_RECONF,
        MilestoneKind.NR_CARRIER_ACT,
        MilestoneKind.NR_MEAS_CONFIRM,
    ),
    MechanismKind.HO_NR: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.HO_START,
        MilestoneKind.TARGET_SYNC,
        MilestoneKind.SCHED_RESUME,
    ),
    MechanismKind.HO_LTE: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.HO_START,
        MilestoneKind.TARGET_SYNC,
        MilestoneKind.SCHED_RESUME,
    ),
    MechanismKind.RR_NR: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.PBCH_MIB_DECODE,
        MilestoneKind.SIB1_ACQ,
        MilestoneKind.S_CRITERIA_PASS,
    ),
    MechanismKind.RR_LTE: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.PBCH_MIB_DECODE,
        MilestoneKind.SIB1_ACQ,
        MilestoneKind.S_CRITERIA_PASS,
    ),
    MechanismKind.BASELINE_NR: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.SSB_DETECT,
        MilestoneKind.PBCH_MIB_DECODE,
        MilestoneKind.SIB1_ACQ,
        MilestoneKind.S_CRITERIA_PASS,
    ),
    MechanismKind.BASELINE_LTE: (
        MilestoneKind.RRC_TRIGGER,
        MilestoneKind.PBCH_MIB_DECODE,
        MilestoneKind.SIB1_ACQ,
        MilestoneKind.PDCCH_DECODE,
        MilestoneKind.S_CRITERIA_PASS,
    ),
}


def execution_template(mechanism: MechanismKind) -> tuple[MilestoneKind, ...]:
    """Ordered milestone sequence a complete execution of `mechanism` must follow."""
    return _TEMPLATES[mechanism]


@dataclass(frozen=True)
class TraceEvent:
    """One timestamped milestone from a trace log."""

    ts_ms: float
    milestone: MilestoneKind
    mechanism_hint: MechanismKind | None = None
    device_id: str = "default"
    raw_seq: int = 0

    def __post_init__(self) -> None:
        if self.ts_ms < 0:
            raise ValueError(f"negative timestamp: {self.ts_ms}")


@dataclass(frozen=True)
class SteeringExecution:
    """A validated milestone sequence for one mechanism run.

    Anchored at the control-plane trigger (t0) and the final completion
    milestone (tf); `first_phy_ms` is the first non-RRC milestone after t0.
    """

    mechanism: MechanismKind
    t0_ms: float
    tf_ms: float
    first_phy_ms: float
    milestones: tuple[tuple[MilestoneKind, float], ...]
    device_id: str = "default"

    def __post_init__(self) -> None:
        template = execution_template(self.mechanism)
        codes = tuple(code for code, _ in self.milestones)
        if codes != template:
            raise ValueError(
                f"milestones {codes} do not match {self.mechanism.value} template"
            )
        times = [t for _, t in self.milestones]
        if times[0] < 0:
            raise ValueError("negative trigger timestamp")
        for earlier, later in zip(times, times[1:]):
            if later < earlier:
                raise ValueError("milestone timestamps decrease")
        if times[0] != self.t0_ms or times[-1] != self.tf_ms:
            raise ValueError("t0/tf do not match anchor milestones")
        if times[1] != self.first_phy_ms:
            raise ValueError("first_phy_ms does not match first non-RRC milestone")


@dataclass(frozen=True)
class LatencyDecomposition:
    """Reaction / PHY-centric split of one execution, with per-stage intervals.

    `t_rrc_phy_ms` is defined as the exact float sum of the two components so
    the additivity identity holds bitwise.
    """

    t_rrc_phy_ms: float
    t_phy_ms: float
    t_react_ms: float
    stages: tuple[tuple[tuple[MilestoneKind, MilestoneKind], float], ...]

    def __post_init__(self) -> None:
        if self.t_phy_ms < 0 or self.t_react_ms < 0:
            raise ValueError("negative latency component")
        if self.t_rrc_phy_ms != self.t_phy_ms + self.t_react_ms:
            raise ValueError("t_rrc_phy_ms must equal t_phy_ms + t_react_ms exactly")
        total = self.t_react_ms
        for _, duration in self.stages:
            if duration < 0:
                raise ValueError("negative stage duration")
            total += duration
        if abs(total - self.t_rrc_phy_ms) > 1e-9:
            raise ValueError("stage durations plus reaction do not add up")


@dataclass(frozen=True)
class DisruptionProfile:
    """Per-mechanism empirical statistics over both timing views.

    `rel_variability` and `amp_ratio` are None when the underlying medians are
    degenerate; such profiles are not policy-eligible.
    """

    mechanism: MechanismKind
    n: int
    samples_phy: tuple[float, ...]
    samples_rrc_phy: tuple[float, ...]
    mean_phy: float
    t95_phy: float
    median_phy: float
    median_rrc_phy: float
    iqr_rrc_phy: float
    rel_variability: float | None
    amp_ratio: float | None

    def __post_init__(self) -> None:
        if self.n != len(self.samples_phy) or self.n != len(self.samples_rrc_phy):
            raise ValueError("sample count mismatch")
        if self.n == 0:
            raise ValueError("empty profile")


@dataclass(frozen=True)
class PolicyParams:
    """Score weights: `tail_weight` trades tail vs mean PHY latency, and
    `variability_weight` scales the completion-variability penalty."""

    tail_weight: float
    variability_weight: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.tail_weight <= 1.0:
            raise ValueError(f"tail_weight outside [0, 1]: {self.tail_weight}")
        if not 0.0 <= self.variability_weight <= 1.0:
            raise ValueError(
                f"variability_weight outside [0, 1]: {self.variability_weight}"
            )


@dataclass(frozen=True)
class Scenario:
    """A named feasibility constraint: the mechanisms allowed for one activation."""

    name: str
    allowed: frozenset[MechanismKind]

    def __post_init__(self) -> None:
        if not self.allowed:
            raise ValueError("scenario allows no mechanisms")
        baselines = [m for m in self.allowed if not m.selectable]
        if baselines:
            raise ValueError(
                f"baseline procedures are not selectable: {sorted(m.value for m in baselines)}"
            )


def canonical_scenarios() -> dict[str, Scenario]:
    """The five built-in scenarios, keyed by normalized name.

    LTE-only defaults to the pure-LTE mobility pair; membership is
    overridable through scenario configuration.
    """
    all_selectable = frozenset(SELECTABLE_MECHANISMS)
    mobility = frozenset(
        {
            MechanismKind.HO_NR,
            MechanismKind.HO_LTE,
            MechanismKind.RR_NR,
            MechanismKind.RR_LTE,
        }
    )
    return {
        "unconstrained": Scenario("unconstrained", all_selectable),
        "no-bwp": Scenario("no-bwp", all_selectable - {MechanismKind.BWP}),
        "mobility-only": Scenario("mobility-only", mobility),
        "lte-only": Scenario(
            "lte-only", frozenset({MechanismKind.HO_LTE, MechanismKind.RR_LTE})
        ),
        "ho-or-bwp": Scenario(
            "ho-or-bwp",
            frozenset({MechanismKind.BWP, MechanismKind.HO_NR, MechanismKind.HO_LTE}),
        ),
    }


def normalize_scenario_name(name: str) -> str:
    return name.strip().lower().replace("_", "-").replace(" ", "-")
