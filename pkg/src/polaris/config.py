"""Run configuration: scenario definitions, policy grid, targets, pipeline settings.

Configuration is a JSON document; the default path comes from the
POLARIS_CONFIG environment variable. Scenario entries extend or override the
built-in five. Example:

    {
      "scenarios": [{"name": "lte-only", "allowed": ["HO_LTE", "RR_LTE", "ENDC"]}],
      "policy_grid": {"tail_weights": [0, 0.5, 1], "variability_weights": [0, 1]},
      "calibration_targets": [{"mechanism": "BWP", "count": 100, ...}],
      "profile_window": 1024,
      "profile_min_n": 5,
      "refresh_period": 50,
      "kpm_period": 25,
      "normalize_over": "scenario"
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .datagen import CalibrationTarget, target_from_json
from .domain import (
    MechanismKind,
    Scenario,
    canonical_scenarios,
    normalize_scenario_name,
)
from .profiling import DEFAULT_MIN_SAMPLES, DEFAULT_WINDOW
from .simulator import DEFAULT_KPM_PERIOD, DEFAULT_REFRESH_PERIOD

CONFIG_ENV_VAR = "POLARIS_CONFIG"

DEFAULT_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class RunConfig:
    scenarios: dict[str, Scenario] = field(default_factory=canonical_scenarios)
    tail_weights: tuple[float, ...] = DEFAULT_GRID
    variability_weights: tuple[float, ...] = DEFAULT_GRID
    calibration_targets: tuple[CalibrationTarget, ...] | None = None
    profile_window: int = DEFAULT_WINDOW
    profile_min_n: int = DEFAULT_MIN_SAMPLES
    refresh_period: int = DEFAULT_REFRESH_PERIOD
    kpm_period: int = DEFAULT_KPM_PERIOD
    normalize_over: str = "scenario"

    def scenario(self, name: str) -> Scenario:
        key = normalize_scenario_name(name)
        try:
            return self.scenarios[key]
        except KeyError:
            raise ValueError(
                f"unknown scenario {name!r}; known: {sorted(self.scenarios)}"
            ) from None


def config_from_dict(doc: dict) -> RunConfig:
    scenarios = canonical_scenarios()
    for entry in doc.get("scenarios", []):
        name = normalize_scenario_name(entry["name"])
        allowed = frozenset(MechanismKind(m) for m in entry["allowed"])
        scenarios[name] = Scenario(name, allowed)
    grid = doc.get("policy_grid", {})
    targets = None
    if "calibration_targets" in doc:
        targets = tuple(target_from_json(t) for t in doc["calibration_targets"])
    return RunConfig(
        scenarios=scenarios,
        tail_weights=tuple(grid.get("tail_weights", DEFAULT_GRID)),
        variability_weights=tuple(grid.get("variability_weights", DEFAULT_GRID)),
        calibration_targets=targets,
        profile_window=int(doc.get("profile_window", DEFAULT_WINDOW)),
        profile_min_n=int(doc.get("profile_min_n", DEFAULT_MIN_SAMPLES)),
        refresh_period=int(doc.get("refresh_period", DEFAULT_REFRESH_PERIOD)),
        kpm_period=int(doc.get("kpm_period", DEFAULT_KPM_PERIOD)),
        normalize_over=str(doc.get("normalize_over", "scenario")),
    )


def load_config(path: str | None = None) -> RunConfig:
    """Load configuration from `path`, the env default, or built-in defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as handle:
        return config_from_dict(json.load(handle))
