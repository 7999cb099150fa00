"""Disruption-aware spectrum steering toolkit.

Trace milestone extraction, latency decomposition, per-mechanism disruption
profiling, score-based mechanism selection, a calibrated corpus generator, and
a closed-loop steering simulator, exposed through a CLI and an HTTP service.
"""

from .domain import (
    LatencyDecomposition,
    MechanismKind,
    MilestoneKind,
    PolicyParams,
    Scenario,
    SteeringExecution,
    TraceEvent,
    canonical_scenarios,
    execution_template,
)
from .policy import BaselineKind, PolicyDecision, baseline_select, select
from .profiling import ProfileStore, build_profile, build_store, percentile, refresh

__version__ = "0.1.0"

__all__ = [
    "BaselineKind",
    "LatencyDecomposition",
    "MechanismKind",
    "MilestoneKind",
    "PolicyDecision",
    "PolicyParams",
    "ProfileStore",
    "Scenario",
    "SteeringExecution",
    "TraceEvent",
    "__version__",
    "baseline_select",
    "build_profile",
    "build_store",
    "canonical_scenarios",
    "execution_template",
    "percentile",
    "refresh",
    "select",
]
