"""Service-layer operations shared by the HTTP routes and the CLI.

Each handler is a pure function from request models (plus an explicit profile
store where one is needed) to response models, so both transports behave
identically.
"""

from __future__ import annotations

from collections import defaultdict

from .. import datagen
from ..config import RunConfig
from ..decomposition import decompose, stage_share
from ..domain import (
    MechanismKind,
    PolicyParams,
    Scenario,
    SteeringExecution,
)
from ..errors import EmptyLogError, NoFeasibleMechanismError
from ..policy import BaselineKind, baseline_select, select
from ..profiling import (
    ProfileStore,
    build_store,
    exceedance_curve,
    export_store,
    import_store,
    refresh,
)
from ..simulator import (
    PolicySpec,
    SpectrumEvent,
    evaluate,
    run,
    summarize_latencies,
)
from ..trace_ingest import (
    execution_to_record,
    ingest_lines,
    record_to_execution,
)
from . import schemas


def executions_to_models(executions) -> list[schemas.ExecutionModel]:
    return [
        schemas.ExecutionModel(**execution_to_record(ex)) for ex in executions
    ]


def models_to_executions(models) -> list[SteeringExecution]:
    return [record_to_execution(m.model_dump()) for m in models]


def resolve_scenario(field: schemas.ScenarioField, config: RunConfig) -> Scenario:
    if isinstance(field, str):
        return config.scenario(field)
    return Scenario(
        field.name, frozenset(MechanismKind(m) for m in field.allowed)
    )


def store_to_model(store: ProfileStore) -> schemas.StoreModel:
    doc = export_store(store)
    return schemas.StoreModel(
        window=doc["window"],
        min_n=doc["min_n"],
        profiles={k: schemas.ProfileModel(**v) for k, v in doc["profiles"].items()},
    )


def model_to_store(model: schemas.StoreModel) -> ProfileStore:
    return import_store(model.model_dump())


def ingest(request: schemas.IngestRequest) -> schemas.IngestResponse:
    executions, report = ingest_lines(request.lines, request.mode)
    return schemas.IngestResponse(
        executions=executions_to_models(executions),
        report=schemas.IngestReportModel(**report.to_dict()),
    )


def build_profiles(request: schemas.BuildProfilesRequest) -> schemas.StoreModel:
    executions = models_to_executions(request.executions)
    pairs = [(ex.mechanism, decompose(ex)) for ex in executions]
    store = build_store(pairs, window=request.window, min_n=request.min_n)
    return store_to_model(store)


def refresh_profiles(
    store: ProfileStore, request: schemas.RefreshRequest
) -> ProfileStore:
    executions = models_to_executions(request.executions)
    pairs = [(ex.mechanism, decompose(ex)) for ex in executions]
    return refresh(store, pairs)


def store_summary(store: ProfileStore) -> schemas.StoreSummaryResponse:
    rows = []
    for mechanism in sorted(store.profiles, key=lambda m: m.value):
        p = store.profiles[mechanism]
        rows.append(
            schemas.MechanismRow(
                mechanism=mechanism.value,
                n=p.n,
                eligible=store.eligible(mechanism),
                amp_ratio=p.amp_ratio,
                rel_variability=p.rel_variability,
                median_phy_ms=p.median_phy,
                median_rrc_phy_ms=p.median_rrc_phy,
                mean_phy_ms=p.mean_phy,
                t95_phy_ms=p.t95_phy,
                iqr_rrc_phy_ms=p.iqr_rrc_phy,
            )
        )
    return schemas.StoreSummaryResponse(
        window=store.window, min_n=store.min_n, rows=rows
    )


def _decision_to_response(decision) -> schemas.DecisionResponse:
    doc = decision.to_dict()
    return schemas.DecisionResponse(
        rule=doc["rule"],
        selected=doc["selected"],
        tie_broken=doc["tie_broken"],
        params=doc["params"],
        normalized_over=doc["normalized_over"],
        candidates=[schemas.CandidateModel(**c) for c in doc["candidates"]],
    )


def decide(
    store: ProfileStore, request: schemas.DecisionRequest, config: RunConfig
) -> schemas.DecisionResponse:
    scenario = resolve_scenario(request.scenario, config)
    if request.policy == "polaris":
        decision = select(
            store,
            scenario,
            PolicyParams(request.tail_weight, request.variability_weight),
            normalize_over=request.normalize_over,
        )
    else:
        decision = baseline_select(store, scenario, BaselineKind(request.policy))
    return _decision_to_response(decision)


def _policy_spec(model: schemas.PolicySpecModel) -> PolicySpec:
    if model.kind == "polaris":
        return PolicySpec(
            "polaris", PolicyParams(model.tail_weight, model.variability_weight)
        )
    return PolicySpec(model.kind)


def simulate(
    store: ProfileStore, request: schemas.SimulateRequest, config: RunConfig
) -> schemas.SimulateResponse:
    events = [
        SpectrumEvent(e.time_ms, e.carrier_id, resolve_scenario(e.scenario, config))
        for e in request.events
    ]
    result = run(
        events,
        store,
        _policy_spec(request.policy),
        seed=request.seed,
        refresh_period=request.refresh_period,
        kpm_period=request.kpm_period,
        normalize_over=request.normalize_over,
    )
    summary = None
    if result.latencies_phy:
        summary = summarize_latencies(result.latencies_phy)
        summary["failures"] = result.failures
        summary["rrc_phy"] = summarize_latencies(result.latencies_rrc_phy)
    return schemas.SimulateResponse(
        telemetry=[r.to_dict() for r in result.records],
        latencies_phy=list(result.latencies_phy),
        latencies_rrc_phy=list(result.latencies_rrc_phy),
        failures=result.failures,
        summary=summary,
    )


def generate(request: schemas.GenerateRequest) -> schemas.GenerateResponse:
    if request.targets is not None:
        targets = [datagen.target_from_json(doc) for doc in request.targets]
    elif request.fixture == "evaluation":
        targets = datagen.evaluation_targets()
    else:
        targets = datagen.default_targets()
    result = datagen.generate_corpus(
        targets, seed=request.seed, scale=request.scale, strict=request.strict
    )
    return schemas.GenerateResponse(
        lines=list(result.lines), summary=result.summary()
    )


def _grid_stability(
    store: ProfileStore,
    scenario: Scenario,
    tail_weights,
    variability_weights,
    normalize_over: str,
) -> schemas.ScenarioStability:
    selected = set()
    for tw in tail_weights:
        for vw in variability_weights:
            try:
                decision = select(
                    store, scenario, PolicyParams(tw, vw), normalize_over
                )
                selected.add(decision.selected.value)
            except NoFeasibleMechanismError:
                selected.add("NO_FEASIBLE_MECHANISM")
    return schemas.ScenarioStability(
        scenario=scenario.name, stable=len(selected) == 1, selected=sorted(selected)
    )


def run_evaluation(
    store: ProfileStore, request: schemas.EvaluateRequest, config: RunConfig
) -> schemas.EvaluateResponse:
    """Sweep (scenario x policy x weights x seed), comparing each grid point
    against every baseline. Infeasible cells are reported FAILED, not dropped."""
    scenario_names = request.scenarios or sorted(config.scenarios)
    tail_weights = request.tail_weights or list(config.tail_weights)
    variability_weights = (
        request.variability_weights or list(config.variability_weights)
    )

    cells: list[schemas.EvaluationCell] = []
    stability: list[schemas.ScenarioStability] = []
    for name in scenario_names:
        scenario = config.scenario(name)
        stability.append(
            _grid_stability(
                store, scenario, tail_weights, variability_weights,
                request.normalize_over,
            )
        )
        for seed in request.seeds:
            events = [
                SpectrumEvent(float(i), f"carrier-{i % 3}", scenario)
                for i in range(request.events_per_cell)
            ]

            baseline_latencies: dict[str, tuple[float, ...]] = {}
            for kind in request.baselines:
                cell, latencies = _run_cell(
                    store, events, PolicySpec(kind), scenario, seed, request
                )
                baseline_latencies[kind] = latencies
                cells.append(cell)

            for tw in tail_weights:
                for vw in variability_weights:
                    spec = PolicySpec("polaris", PolicyParams(tw, vw))
                    cell, latencies = _run_cell(
                        store, events, spec, scenario, seed, request
                    )
                    if cell.status == "OK":
                        reductions: dict = {}
                        for kind, base in baseline_latencies.items():
                            if base:
                                reductions[kind] = schemas.ReductionModel(
                                    **{
                                        k: v
                                        for k, v in evaluate(latencies, base).items()
                                        if k in ("mean_reduction", "t95_reduction")
                                    }
                                )
                            else:
                                reductions[kind] = "FAILED"
                        cell = cell.model_copy(update={"reductions": reductions})
                    cells.append(cell)
    return schemas.EvaluateResponse(cells=cells, stability=stability)


def _run_cell(
    store: ProfileStore,
    events: list[SpectrumEvent],
    spec: PolicySpec,
    scenario: Scenario,
    seed: int,
    request: schemas.EvaluateRequest,
) -> tuple[schemas.EvaluationCell, tuple[float, ...]]:
    result = run(
        events,
        store,
        spec,
        seed=seed,
        refresh_period=request.refresh_period,
        kpm_period=request.kpm_period,
        normalize_over=request.normalize_over,
    )
    base = dict(
        scenario=scenario.name,
        policy=spec.label(),
        kind=spec.kind,
        tail_weight=spec.params.tail_weight if spec.params else None,
        variability_weight=spec.params.variability_weight if spec.params else None,
        seed=seed,
        failures=result.failures,
        n=len(result.latencies_phy),
    )
    if not result.latencies_phy:
        cell = schemas.EvaluationCell(
            status="FAILED", error="no successful activations", **base
        )
        return cell, ()
    try:
        summary = summarize_latencies(result.latencies_phy)
    except EmptyLogError:  # pragma: no cover - guarded above
        raise
    cell = schemas.EvaluationCell(
        status="OK",
        mean_ms=summary["mean_ms"],
        t95_ms=summary["t95_ms"],
        exceedance_50ms=summary["exceedance_50ms"],
        **base,
    )
    return cell, result.latencies_phy


def exceedance(
    store: ProfileStore, request: schemas.ExceedanceRequest
) -> schemas.ExceedanceResponse:
    mechanism = MechanismKind(request.mechanism)
    profile = store.profiles.get(mechanism)
    if profile is None:
        raise EmptyLogError(f"no profile for {mechanism.value}")
    samples = (
        profile.samples_phy if request.view == "phy" else profile.samples_rrc_phy
    )
    thresholds = request.thresholds or list(schemas.DEFAULT_THRESHOLDS_MS)
    return schemas.ExceedanceResponse(
        mechanism=mechanism.value,
        view=request.view,
        curve=exceedance_curve(samples, thresholds),
    )


def report_bundle(
    store: ProfileStore, request: schemas.ReportRequest
) -> schemas.ReportBundle:
    thresholds = request.thresholds or list(schemas.DEFAULT_THRESHOLDS_MS)
    medians = []
    curve_phy = []
    curve_rrc = []
    for mechanism in sorted(store.profiles, key=lambda m: m.value):
        p = store.profiles[mechanism]
        medians.append(
            {
                "mechanism": mechanism.value,
                "median_phy_ms": p.median_phy,
                "median_rrc_phy_ms": p.median_rrc_phy,
            }
        )
        for t, prob in exceedance_curve(p.samples_phy, thresholds):
            curve_phy.append(
                {"mechanism": mechanism.value, "threshold_ms": t, "probability": prob}
            )
        for t, prob in exceedance_curve(p.samples_rrc_phy, thresholds):
            curve_rrc.append(
                {"mechanism": mechanism.value, "threshold_ms": t, "probability": prob}
            )

    stage_rows: list[schemas.StageShareRow] = []
    if request.executions:
        executions = models_to_executions(request.executions)
        acc: dict = defaultdict(lambda: [0, 0.0, 0.0])  # n, share sum, duration sum
        for ex in executions:
            decomp = decompose(ex)
            for (start, end), duration in decomp.stages:
                entry = acc[(ex.mechanism, start, end)]
                entry[0] += 1
                entry[1] += stage_share(decomp, start, end)
                entry[2] += duration
        for (mechanism, start, end), (n, share_sum, dur_sum) in sorted(
            acc.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2].value)
        ):
            stage_rows.append(
                schemas.StageShareRow(
                    mechanism=mechanism.value,
                    stage_start=start.value,
                    stage_end=end.value,
                    n=n,
                    mean_share=share_sum / n,
                    mean_duration_ms=dur_sum / n,
                )
            )
    return schemas.ReportBundle(
        medians=medians,
        exceedance_phy=curve_phy,
        exceedance_rrc_phy=curve_rrc,
        stage_shares=stage_rows,
    )


def bootstrap_store(request: schemas.BootstrapRequest) -> ProfileStore:
    if (request.executions is None) == (request.store is None):
        raise ValueError("provide exactly one of executions or store")
    if request.store is not None:
        return model_to_store(request.store)
    executions = models_to_executions(request.executions)
    pairs = [(ex.mechanism, decompose(ex)) for ex in executions]
    return build_store(pairs, window=request.window, min_n=request.min_n)
