"""Pydantic request/response models for the steering service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

PolicyKind = Literal["polaris", "always_bwp", "always_ho", "min_mean", "min_t95"]

DEFAULT_THRESHOLDS_MS = (
    1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0,
    1000.0, 2000.0, 5000.0, 10000.0, 20000.0, 50000.0, 100000.0,
)


class ExecutionModel(BaseModel):
    model_config = ConfigDict(extra="ignore")

    mechanism: str
    device_id: str = "default"
    t0_ms: float
    tf_ms: float
    first_phy_ms: float
    milestones: list[tuple[str, float]]


class RejectModel(BaseModel):
    device_id: str
    first_seq: int
    last_seq: int
    reason: str
    n_events: int


class LineSkipModel(BaseModel):
    line_no: int
    code: str
    detail: str = ""


class IngestReportModel(BaseModel):
    events_read: int
    executions_ok: int
    executions_rejected: int
    rejects: list[RejectModel]
    line_skips: list[LineSkipModel] = Field(default_factory=list)
    events_matched: int
    events_dropped: int
    events_rejected: int
    events_idle: int


class IngestRequest(BaseModel):
    lines: list[str]
    mode: Literal["lenient", "strict"] = "lenient"


class IngestResponse(BaseModel):
    executions: list[ExecutionModel]
    report: IngestReportModel


class ProfileModel(BaseModel):
    n: int
    samples_phy: list[float]
    samples_rrc_phy: list[float]
    mean_phy: float
    t95_phy: float
    median_phy: float
    median_rrc_phy: float
    iqr_rrc_phy: float
    rel_variability: Optional[float] = None
    amp_ratio: Optional[float] = None
    eligible: bool = True


class StoreModel(BaseModel):
    window: int
    min_n: int
    profiles: dict[str, ProfileModel]


class BuildProfilesRequest(BaseModel):
    executions: list[ExecutionModel]
    window: int = 1024
    min_n: int = 5


class BootstrapRequest(BaseModel):
    """Load service profiles from segmented executions or a store document."""

    executions: Optional[list[ExecutionModel]] = None
    store: Optional[StoreModel] = None
    window: int = 1024
    min_n: int = 5


class ScenarioSpec(BaseModel):
    name: str
    allowed: list[str]


ScenarioField = Union[str, ScenarioSpec]


class MechanismRow(BaseModel):
    """One profile summary row: the two derived indicators plus the medians,
    mean and tail statistics they come from."""

    mechanism: str
    n: int
    eligible: bool
    amp_ratio: Optional[float] = None
    rel_variability: Optional[float] = None
    median_phy_ms: float
    median_rrc_phy_ms: float
    mean_phy_ms: float
    t95_phy_ms: float
    iqr_rrc_phy_ms: float


class StoreSummaryResponse(BaseModel):
    window: int
    min_n: int
    rows: list[MechanismRow]


class CandidateModel(BaseModel):
    mechanism: str
    raw_mean_phy: float
    raw_t95_phy: float
    raw_variability: float
    norm_mean: float
    norm_t95: float
    norm_variability: float
    score: float


class DecisionRequest(BaseModel):
    scenario: ScenarioField
    policy: PolicyKind = "polaris"
    tail_weight: float = 0.5
    variability_weight: float = 0.5
    normalize_over: Literal["scenario", "all"] = "scenario"


class DecisionResponse(BaseModel):
    rule: str
    selected: str
    tie_broken: bool
    params: Optional[dict] = None
    normalized_over: list[str]
    candidates: list[CandidateModel]


class EventModel(BaseModel):
    time_ms: float
    carrier_id: str
    scenario: ScenarioField


class PolicySpecModel(BaseModel):
    kind: PolicyKind = "polaris"
    tail_weight: float = 0.5
    variability_weight: float = 0.5


class SimulateRequest(BaseModel):
    events: list[EventModel]
    policy: PolicySpecModel = Field(default_factory=PolicySpecModel)
    seed: int = 0
    refresh_period: int = 50
    kpm_period: int = 25
    normalize_over: Literal["scenario", "all"] = "scenario"


class SimulateResponse(BaseModel):
    telemetry: list[dict]
    latencies_phy: list[float]
    latencies_rrc_phy: list[float]
    failures: int
    summary: Optional[dict] = None


class GenerateRequest(BaseModel):
    seed: int = 42
    scale: float = 1.0
    fixture: Literal["calibration", "evaluation"] = "calibration"
    targets: Optional[list[dict]] = None
    strict: bool = False


class GenerateResponse(BaseModel):
    lines: list[str]
    summary: dict


class ReductionModel(BaseModel):
    mean_reduction: float
    t95_reduction: float


class EvaluationCell(BaseModel):
    scenario: str
    policy: str
    kind: PolicyKind
    tail_weight: Optional[float] = None
    variability_weight: Optional[float] = None
    seed: int
    status: Literal["OK", "FAILED"]
    error: Optional[str] = None
    n: int = 0
    failures: int = 0
    mean_ms: Optional[float] = None
    t95_ms: Optional[float] = None
    exceedance_50ms: Optional[float] = None
    reductions: dict[str, Union[ReductionModel, Literal["FAILED"]]] = Field(
        default_factory=dict
    )


class ScenarioStability(BaseModel):
    scenario: str
    stable: bool
    selected: list[str]


class EvaluateRequest(BaseModel):
    scenarios: Optional[list[str]] = None  # default: the five canonical ones
    tail_weights: Optional[list[float]] = None
    variability_weights: Optional[list[float]] = None
    baselines: list[PolicyKind] = Field(
        default_factory=lambda: ["always_bwp", "always_ho", "min_mean", "min_t95"]
    )
    seeds: list[int] = Field(default_factory=lambda: [7])
    events_per_cell: int = 2000
    refresh_period: int = 0
    kpm_period: int = 0
    normalize_over: Literal["scenario", "all"] = "scenario"


class EvaluateResponse(BaseModel):
    cells: list[EvaluationCell]
    stability: list[ScenarioStability]


class ExceedanceRequest(BaseModel):
    mechanism: str
    view: Literal["phy", "rrc_phy"] = "phy"
    thresholds: Optional[list[float]] = None


class ExceedanceResponse(BaseModel):
    mechanism: str
    view: str
    curve: list[tuple[float, float]]


class RefreshRequest(BaseModel):
    executions: list[ExecutionModel]


class StageShareRow(BaseModel):
    mechanism: str
    stage_start: str
    stage_end: str
    n: int
    mean_share: float
    mean_duration_ms: float


class ReportRequest(BaseModel):
    thresholds: Optional[list[float]] = None
    executions: Optional[list[ExecutionModel]] = None


class ReportBundle(BaseModel):
    """Plot-ready tables: median bars, exceedance curves (both views), and the
    per-stage attribution table when executions are supplied."""

    medians: list[dict]
    exceedance_phy: list[dict]
    exceedance_rrc_phy: list[dict]
    stage_shares: list[StageShareRow] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str
    profiles_loaded: bool
    mechanisms: list[str] = Field(default_factory=list)
