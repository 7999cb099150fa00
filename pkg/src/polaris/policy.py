"""Mechanism selection: disruption score, normalization, argmin rule, baselines.

The disruption score blends tail and mean PHY-centric latency and inflates the
blend by a completion-variability penalty:

    score = [w_tail * t95_norm + (1 - w_tail) * mean_norm] * (1 + w_var * var_norm)

All components are min-max normalized over the candidate set before scoring,
so the weights are comparable regardless of the raw scales. Ties break on the
lexicographically smallest mechanism id for determinism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .domain import MechanismKind, PolicyParams, Scenario
from .errors import (
    FixedMechanismUnavailableError,
    NoFeasibleMechanismError,
    NonFiniteInputError,
)
from .profiling import ProfileStore

NORMALIZE_OVER = ("scenario", "all")


class BaselineKind(str, Enum):
    ALWAYS_BWP = "always_bwp"
    ALWAYS_HO = "always_ho"
    MIN_MEAN = "min_mean"
    MIN_T95 = "min_t95"


@dataclass(frozen=True)
class ScoreComponents:
    raw_mean_phy: float
    raw_t95_phy: float
    raw_variability: float
    norm_mean: float
    norm_t95: float
    norm_variability: float


@dataclass(frozen=True)
class CandidateScore:
    mechanism: MechanismKind
    components: ScoreComponents
    score: float


@dataclass(frozen=True)
class PolicyDecision:
    """Full decision trace: every candidate with raw and normalized components,
    the ranking value used by the rule, and the selected mechanism."""

    candidates: tuple[CandidateScore, ...]
    selected: MechanismKind
    tie_broken: bool
    rule: str
    params: PolicyParams | None = None
    normalized_over: tuple[MechanismKind, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "params": (
                None
                if self.params is None
                else {
                    "tail_weight": self.params.tail_weight,
                    "variability_weight": self.params.variability_weight,
                }
            ),
            "selected": self.selected.value,
            "tie_broken": self.tie_broken,
            "normalized_over": [m.value for m in self.normalized_over],
            "candidates": [
                {
                    "mechanism": c.mechanism.value,
                    "raw_mean_phy": c.components.raw_mean_phy,
                    "raw_t95_phy": c.components.raw_t95_phy,
                    "raw_variability": c.components.raw_variability,
                    "norm_mean": c.components.norm_mean,
                    "norm_t95": c.components.norm_t95,
                    "norm_variability": c.components.norm_variability,
                    "score": c.score,
                }
                for c in self.candidates
            ],
        }


RawComponents = tuple[float, float, float]  # (mean_phy, t95_phy, variability)


def normalize(
    raw: list[tuple[MechanismKind, RawComponents]],
) -> list[tuple[MechanismKind, ScoreComponents]]:
    """Min-max normalize each component over the candidate set.

    A component with no spread normalizes to 0 for every candidate, so a
    shared value never contributes to any score.
    """
    if not raw:
        raise ValueError("no candidates to normalize")
    for mechanism, comps in raw:
        for v in comps:
            if not math.isfinite(v) or v < 0:
                raise NonFiniteInputError(
                    f"{mechanism.value} has invalid component value {v!r}"
                )

    def scaled(idx: int) -> list[float]:
        values = [comps[idx] for _, comps in raw]
        lo, hi = min(values), max(values)
        if hi == lo:
            return [0.0] * len(values)
        return [(v - lo) / (hi - lo) for v in values]

    means, t95s, variabilities = scaled(0), scaled(1), scaled(2)
    return [
        (
            mechanism,
            ScoreComponents(
                raw_mean_phy=comps[0],
                raw_t95_phy=comps[1],
                raw_variability=comps[2],
                norm_mean=means[i],
                norm_t95=t95s[i],
                norm_variability=variabilities[i],
            ),
        )
        for i, (mechanism, comps) in enumerate(raw)
    ]


def disruption_score(components: ScoreComponents, params: PolicyParams) -> float:
    """Weighted tail/mean blend, inflated by the variability penalty."""
    blend = (
        params.tail_weight * components.norm_t95
        + (1.0 - params.tail_weight) * components.norm_mean
    )
    return blend * (1.0 + params.variability_weight * components.norm_variability)


def _raw_components(store: ProfileStore, mechanism: MechanismKind) -> RawComponents:
    p = store.profiles[mechanism]
    return (p.mean_phy, p.t95_phy, p.rel_variability)


def _feasible(store: ProfileStore, scenario: Scenario) -> list[MechanismKind]:
    candidates = sorted(
        (m for m in scenario.allowed if store.eligible(m)), key=lambda m: m.value
    )
    if not candidates:
        raise NoFeasibleMechanismError(
            f"no eligible mechanism available in scenario {scenario.name!r}"
        )
    return candidates


def _argmin(
    entries: list[tuple[MechanismKind, float]],
) -> tuple[MechanismKind, bool]:
    # entries are sorted by mechanism id, so the first minimizer is the
    # lexicographic tie-break winner
    best = min(score for _, score in entries)
    winners = [m for m, score in entries if score == best]
    return winners[0], len(winners) > 1


def select(
    store: ProfileStore,
    scenario: Scenario,
    params: PolicyParams,
    normalize_over: str = "scenario",
) -> PolicyDecision:
    """Pick the mechanism minimizing the disruption score within a scenario.

    `normalize_over` controls the normalization basis: the scenario-filtered
    candidate set (default) or every eligible mechanism in the store.
    """
    if normalize_over not in NORMALIZE_OVER:
        raise ValueError(f"normalize_over must be one of {NORMALIZE_OVER}")
    candidates = _feasible(store, scenario)
    if normalize_over == "all":
        basis = list(store.eligible_mechanisms())
        basis = [m for m in basis if m.selectable]
    else:
        basis = candidates
    normalized = dict(normalize([(m, _raw_components(store, m)) for m in basis]))
    scored = [
        CandidateScore(m, normalized[m], disruption_score(normalized[m], params))
        for m in candidates
    ]
    selected, tie = _argmin([(c.mechanism, c.score) for c in scored])
    return PolicyDecision(
        candidates=tuple(scored),
        selected=selected,
        tie_broken=tie,
        rule="disruption_score",
        params=params,
        normalized_over=tuple(basis),
    )


def baseline_select(
    store: ProfileStore, scenario: Scenario, kind: BaselineKind
) -> PolicyDecision:
    """Static reference policies: fixed mechanism, min raw mean, min raw T95.

    always_ho resolves to the handover variant with the smaller raw mean among
    those available; fixed policies fail with FIXED_MECHANISM_UNAVAILABLE when
    their mechanism is outside the scenario.
    """
    kind = BaselineKind(kind)
    candidates = _feasible(store, scenario)
    normalized = dict(normalize([(m, _raw_components(store, m)) for m in candidates]))

    def decision(ranking: dict[MechanismKind, float], pool: list[MechanismKind]):
        entries = [(m, ranking[m]) for m in pool]
        selected, tie = _argmin(entries)
        scored = tuple(
            CandidateScore(m, normalized[m], ranking.get(m, math.inf))
            for m in candidates
        )
        return PolicyDecision(
            candidates=scored,
            selected=selected,
            tie_broken=tie,
            rule=kind.value,
            params=None,
            normalized_over=tuple(candidates),
        )

    means = {m: normalized[m].raw_mean_phy for m in candidates}
    if kind is BaselineKind.ALWAYS_BWP:
        if MechanismKind.BWP not in candidates:
            raise FixedMechanismUnavailableError(
                f"BWP unavailable in scenario {scenario.name!r}"
            )
        return decision(means, [MechanismKind.BWP])
    if kind is BaselineKind.ALWAYS_HO:
        pool = [m for m in candidates if m in (MechanismKind.HO_LTE, MechanismKind.HO_NR)]
        if not pool:
            raise FixedMechanismUnavailableError(
                f"no handover variant available in scenario {scenario.name!r}"
            )
        return decision(means, pool)
    if kind is BaselineKind.MIN_MEAN:
        return decision(means, candidates)
    t95s = {m: normalized[m].raw_t95_phy for m in candidates}
    return decision(t95s, candidates)
