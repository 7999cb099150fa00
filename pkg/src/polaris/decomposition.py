"""Latency decomposition of steering executions.

An execution's total trigger-to-completion latency splits into the modem's
reaction delay (trigger to first non-RRC milestone) and the PHY-centric
execution cost (first non-RRC milestone to completion). The PHY-centric part
is further attributed to consecutive milestone stages.
"""

from __future__ import annotations

from .domain import LatencyDecomposition, MilestoneKind, SteeringExecution
from .errors import StageAbsentError


def decompose(ex: SteeringExecution) -> LatencyDecomposition:
    """Split one execution into reaction, PHY-centric and per-stage intervals.

    The total is computed as t_react + t_phy so the additivity identity is
    exact in float arithmetic (it equals tf - t0 up to rounding).
    """
    t_phy = ex.tf_ms - ex.first_phy_ms
    t_react = ex.first_phy_ms - ex.t0_ms
    phy_milestones = ex.milestones[1:]
    stages = tuple(
        ((a_code, b_code), b_ts - a_ts)
        for (a_code, a_ts), (b_code, b_ts) in zip(phy_milestones, phy_milestones[1:])
    )
    return LatencyDecomposition(
        t_rrc_phy_ms=t_react + t_phy,
        t_phy_ms=t_phy,
        t_react_ms=t_react,
        stages=stages,
    )


def stage_share(
    decomp: LatencyDecomposition, start: MilestoneKind, end: MilestoneKind
) -> float:
    """Fraction of the PHY-centric execution spent in one milestone stage.

    The divisor is t_phy (the sum of all stages): reaction delay is a wait
    before PHY work starts, so attributing stages against it would cap every
    share at 1/amplification and make shares incomparable across mechanisms.
    Returns 0.0 for a degenerate all-zero execution.
    """
    for (a, b), duration in decomp.stages:
        if a is start and b is end:
            if decomp.t_phy_ms <= 0.0:
                return 0.0
            return min(max(duration / decomp.t_phy_ms, 0.0), 1.0)
    raise StageAbsentError(
        f"stage {start.value}->{end.value} not present in decomposition"
    )
