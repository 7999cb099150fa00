"""Command-line pipeline: generate, ingest, profile, score, simulate, evaluate, report.

Each subcommand is a thin client of the service layer: it reads files into the
service request models, calls the same handlers the HTTP routes use, and writes
the responses back out as JSON/CSV. Exit codes: 0 success, 1 validation
failure, 2 infeasibility, 3 I/O.

Commands that draw random numbers (generate, simulate, evaluate) take --seed;
identical seeds reproduce identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .config import CONFIG_ENV_VAR, load_config
from .datagen import target_to_json
from .errors import PolarisError
from .service import handlers, schemas

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read().splitlines()


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")


def _read_json(path: str):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _write_json(path: str, doc) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def _load_executions(path: str) -> list[schemas.ExecutionModel]:
    models = []
    for line in _read_lines(path):
        if line.strip():
            models.append(schemas.ExecutionModel(**json.loads(line)))
    return models


def _load_store(path: str):
    doc = _read_json(path)
    return handlers.model_to_store(schemas.StoreModel(**doc))


def cmd_generate(args) -> int:
    targets = None
    if args.targets:
        targets = _read_json(args.targets)
    else:
        config = load_config(args.config)
        if config.calibration_targets is not None:
            targets = [target_to_json(t) for t in config.calibration_targets]
    request = schemas.GenerateRequest(
        seed=args.seed,
        scale=args.scale,
        fixture=args.fixture,
        targets=targets,
        strict=args.strict_targets,
    )
    response = handlers.generate(request)
    _write_lines(args.out, response.lines)
    if args.summary:
        _write_json(args.summary, response.summary)
    print(json.dumps(response.summary, indent=2))
    return EXIT_OK


def cmd_ingest(args) -> int:
    response = handlers.ingest(
        schemas.IngestRequest(lines=_read_lines(args.trace), mode=args.mode)
    )
    _write_lines(
        args.out_executions,
        (json.dumps(m.model_dump()) for m in response.executions),
    )
    report = response.report.model_dump()
    if args.out_report:
        _write_json(args.out_report, report)
    print(
        f"events_read={report['events_read']} executions_ok={report['executions_ok']} "
        f"executions_rejected={report['executions_rejected']} "
        f"line_skips={len(report['line_skips'])}"
    )
    rejected = report["executions_rejected"] > 0 or report["line_skips"]
    if rejected and not args.allow_rejects:
        print("rejects present; rerun with --allow-rejects to accept", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_profile(args) -> int:
    request = schemas.BuildProfilesRequest(
        executions=_load_executions(args.executions),
        window=args.window,
        min_n=args.min_n,
    )
    store_model = handlers.build_profiles(request)
    _write_json(args.out_store, store_model.model_dump())
    summary = handlers.store_summary(handlers.model_to_store(store_model))
    if args.out_table:
        _write_json(args.out_table, summary.model_dump()["rows"])
    _print_summary_table(summary)
    return EXIT_OK


def _print_summary_table(summary: schemas.StoreSummaryResponse) -> None:
    header = (
        f"{'mechanism':14s} {'n':>6s} {'ratio':>8s} {'variability':>11s} "
        f"{'med_phy':>9s} {'med_rrc':>10s} {'mean_phy':>9s} {'t95_phy':>9s} eligible"
    )
    print(header)
    for row in summary.rows:
        ratio = f"{row.amp_ratio:.1f}" if row.amp_ratio is not None else "n/a"
        var = f"{row.rel_variability:.2f}" if row.rel_variability is not None else "n/a"
        print(
            f"{row.mechanism:14s} {row.n:6d} {ratio:>8s} {var:>11s} "
            f"{row.median_phy_ms:9.2f} {row.median_rrc_phy_ms:10.2f} "
            f"{row.mean_phy_ms:9.2f} {row.t95_phy_ms:9.2f} "
            f"{'yes' if row.eligible else 'INELIGIBLE'}"
        )


def cmd_score(args) -> int:
    store = _load_store(args.store)
    config = load_config(args.config)
    response = handlers.decide(
        store,
        schemas.DecisionRequest(
            scenario=args.scenario,
            policy=args.policy,
            tail_weight=args.tail_weight,
            variability_weight=args.variability_weight,
            normalize_over=args.normalize_over,
        ),
        config,
    )
    doc = response.model_dump()
    if args.out:
        _write_json(args.out, doc)
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _load_events(path: str) -> list[schemas.EventModel]:
    events = []
    for line in _read_lines(path):
        if line.strip():
            events.append(schemas.EventModel(**json.loads(line)))
    return events


def cmd_simulate(args) -> int:
    store = _load_store(args.store)
    config = load_config(args.config)
    response = handlers.simulate(
        store,
        schemas.SimulateRequest(
            events=_load_events(args.events),
            policy=schemas.PolicySpecModel(
                kind=args.policy,
                tail_weight=args.tail_weight,
                variability_weight=args.variability_weight,
            ),
            seed=args.seed,
            refresh_period=args.refresh_period,
            kpm_period=args.kpm_period,
            normalize_over=args.normalize_over,
        ),
        config,
    )
    if args.out_telemetry:
        _write_lines(
            args.out_telemetry,
            (json.dumps(r, sort_keys=True) for r in response.telemetry),
        )
    summary = {
        "failures": response.failures,
        "activations": len(response.latencies_phy) + response.failures,
        "summary": response.summary,
    }
    if args.out_summary:
        _write_json(args.out_summary, summary)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    store = _load_store(args.store)
    config = load_config(args.config)
    request = schemas.EvaluateRequest(
        scenarios=args.scenarios.split(",") if args.scenarios else None,
        seeds=[int(s) for s in args.seeds.split(",")],
        events_per_cell=args.events_per_cell,
        refresh_period=args.refresh_period,
        kpm_period=args.kpm_period,
        normalize_over=args.normalize_over,
    )
    response = handlers.run_evaluation(store, request, config)
    doc = response.model_dump()
    _write_json(args.out_json, doc)
    if args.out_csv:
        _write_evaluation_csv(args.out_csv, response)
    stable = {s.scenario: s.stable for s in response.stability}
    failed = sum(1 for c in response.cells if c.status == "FAILED")
    print(
        json.dumps(
            {"cells": len(response.cells), "failed_cells": failed, "stable": stable},
            indent=2,
        )
    )
    return EXIT_OK


def _write_evaluation_csv(path: str, response: schemas.EvaluateResponse) -> None:
    baselines = sorted(
        {k for c in response.cells for k in c.reductions}
    )
    fields = [
        "scenario", "policy", "kind", "tail_weight", "variability_weight", "seed",
        "status", "error", "n", "failures", "mean_ms", "t95_ms", "exceedance_50ms",
    ]
    for baseline in baselines:
        fields.append(f"mean_reduction_vs_{baseline}")
        fields.append(f"t95_reduction_vs_{baseline}")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for cell in response.cells:
            row = cell.model_dump(exclude={"reductions"})
            for baseline in baselines:
                reduction = cell.reductions.get(baseline)
                if isinstance(reduction, schemas.ReductionModel):
                    row[f"mean_reduction_vs_{baseline}"] = reduction.mean_reduction
                    row[f"t95_reduction_vs_{baseline}"] = reduction.t95_reduction
                elif reduction == "FAILED":
                    row[f"mean_reduction_vs_{baseline}"] = "FAILED"
                    row[f"t95_reduction_vs_{baseline}"] = "FAILED"
            writer.writerow(row)


def cmd_report(args) -> int:
    store = _load_store(args.store)
    request = schemas.ReportRequest(
        thresholds=(
            [float(t) for t in args.thresholds.split(",")] if args.thresholds else None
        ),
        executions=_load_executions(args.executions) if args.executions else None,
    )
    bundle = handlers.report_bundle(store, request)
    os.makedirs(args.out_dir, exist_ok=True)

    def write_csv(name: str, rows: list[dict], fields: list[str]) -> None:
        with open(
            os.path.join(args.out_dir, name), "w", encoding="utf-8", newline=""
        ) as handle:
            writer = csv.DictWriter(handle, fieldnames=fields)
            writer.writeheader()
            writer.writerows(rows)

    write_csv(
        "fig1_median_latency.csv",
        bundle.medians,
        ["mechanism", "median_phy_ms", "median_rrc_phy_ms"],
    )
    write_csv(
        "fig2a_exceedance_phy.csv",
        bundle.exceedance_phy,
        ["mechanism", "threshold_ms", "probability"],
    )
    write_csv(
        "fig2b_exceedance_rrc_phy.csv",
        bundle.exceedance_rrc_phy,
        ["mechanism", "threshold_ms", "probability"],
    )
    if bundle.stage_shares:
        write_csv(
            "stage_shares.csv",
            [r.model_dump() for r in bundle.stage_shares],
            ["mechanism", "stage_start", "stage_end", "n", "mean_share", "mean_duration_ms"],
        )
    print(f"report written to {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polaris",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a calibrated synthetic trace corpus")
    p.add_argument("--out", required=True, help="output trace file (JSON-lines)")
    p.add_argument("--seed", type=int, default=42, help="RNG seed; same seed, same bytes")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on per-mechanism counts")
    p.add_argument("--fixture", choices=["calibration", "evaluation"], default="calibration")
    p.add_argument("--targets", help="JSON file of calibration targets (overrides --fixture)")
    p.add_argument("--config", help="config JSON; its calibration_targets are used when --targets is absent")
    p.add_argument("--strict-targets", action="store_true",
                   help="fail instead of clamping infeasible targets")
    p.add_argument("--summary", help="write generation summary JSON here")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="parse and segment a trace file")
    p.add_argument("--trace", required=True)
    p.add_argument("--mode", choices=["lenient", "strict"], default="lenient")
    p.add_argument("--out-executions", required=True)
    p.add_argument("--out-report")
    p.add_argument("--allow-rejects", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("profile", help="build disruption profiles from executions")
    p.add_argument("--executions", required=True)
    p.add_argument("--out-store", required=True)
    p.add_argument("--out-table")
    p.add_argument("--window", type=int, default=1024)
    p.add_argument("--min-n", type=int, default=5)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("score", help="one-shot decision trace for a scenario")
    p.add_argument("--store", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", default="polaris",
                   choices=["polaris", "always_bwp", "always_ho", "min_mean", "min_t95"])
    p.add_argument("--tail-weight", type=float, default=0.5)
    p.add_argument("--variability-weight", type=float, default=0.5)
    p.add_argument("--normalize-over", choices=["scenario", "all"], default="scenario")
    p.add_argument("--config", help=f"config JSON (default ${CONFIG_ENV_VAR})")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="run the closed control loop over an event stream")
    p.add_argument("--store", required=True)
    p.add_argument("--events", required=True, help="JSON-lines: time_ms, carrier_id, scenario")
    p.add_argument("--policy", default="polaris",
                   choices=["polaris", "always_bwp", "always_ho", "min_mean", "min_t95"])
    p.add_argument("--tail-weight", type=float, default=0.5)
    p.add_argument("--variability-weight", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0, help="bootstrap-resampling seed")
    p.add_argument("--refresh-period", type=int, default=50,
                   help="refresh profiles every N successful activations (0 disables)")
    p.add_argument("--kpm-period", type=int, default=25,
                   help="telemetry report cadence in activations (0 disables)")
    p.add_argument("--normalize-over", choices=["scenario", "all"], default="scenario")
    p.add_argument("--config")
    p.add_argument("--out-telemetry")
    p.add_argument("--out-summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="sweep scenarios x policies x weights")
    p.add_argument("--store", required=True)
    p.add_argument("--scenarios", help="comma-separated names (default: all configured)")
    p.add_argument("--seeds", default="7", help="comma-separated seeds")
    p.add_argument("--events-per-cell", type=int, default=2000)
    p.add_argument("--refresh-period", type=int, default=0)
    p.add_argument("--kpm-period", type=int, default=0)
    p.add_argument("--normalize-over", choices=["scenario", "all"], default="scenario")
    p.add_argument("--config")
    p.add_argument("--out-json", required=True)
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="write plot-ready CSV tables")
    p.add_argument("--store", required=True)
    p.add_argument("--executions", help="segmented executions for the stage-share table")
    p.add_argument("--thresholds", help="comma-separated exceedance thresholds (ms)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PolarisError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
