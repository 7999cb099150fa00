"""Per-mechanism disruption profiles: empirical distributions and refresh.

Profiles keep raw sample buffers for both timing views and recompute every
derived statistic from the buffers, so stored values never drift from what a
recomputation would give. Stores are immutable snapshots: a refresh returns a
new store and leaves previous snapshots untouched.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .domain import DisruptionProfile, LatencyDecomposition, MechanismKind
from .errors import EmptySamplesError, ProfileImportError, ZeroMedianError

DEFAULT_WINDOW = 1024
DEFAULT_MIN_SAMPLES = 5

_ZERO_EPS = 1e-9


def _quantile_sorted(sorted_vals: list[float], p: float) -> float:
    # linear interpolation between closest ranks: position = 1 + (n - 1) * p
    n = len(sorted_vals)
    pos = 1.0 + (n - 1) * p
    lo = int(math.floor(pos))
    if lo >= n:
        return sorted_vals[-1]
    frac = pos - lo
    return sorted_vals[lo - 1] + frac * (sorted_vals[lo] - sorted_vals[lo - 1])


def percentile(samples: Iterable[float], p: float) -> float:
    """Interpolated percentile of a sample multiset, p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p outside [0, 1]: {p}")
    vals = sorted(samples)
    if not vals:
        raise EmptySamplesError("percentile of empty sample set")
    return _quantile_sorted(vals, p)


def relative_variability(samples: Iterable[float]) -> float:
    """Interquartile range over median.

    Returns 0.0 when the distribution is fully degenerate; raises
    ZeroMedianError when the median is ~0 but the spread is not, since the
    ratio is then meaningless and the profile must be flagged ineligible.
    """
    vals = sorted(samples)
    if not vals:
        raise EmptySamplesError("relative variability of empty sample set")
    q1 = _quantile_sorted(vals, 0.25)
    q3 = _quantile_sorted(vals, 0.75)
    med = _quantile_sorted(vals, 0.5)
    iqr = q3 - q1
    if med <= _ZERO_EPS:
        if iqr <= _ZERO_EPS:
            return 0.0
        raise ZeroMedianError(f"median ~0 with IQR {iqr}")
    return iqr / med


def exceedance_curve(
    samples: Iterable[float], thresholds: Iterable[float]
) -> list[tuple[float, float]]:
    """P(T > t) for each threshold; thresholds must be strictly increasing."""
    vals = sorted(samples)
    if not vals:
        raise EmptySamplesError("exceedance of empty sample set")
    ts = list(thresholds)
    for a, b in zip(ts, ts[1:]):
        if b <= a:
            raise ValueError("thresholds must be strictly increasing")
    n = len(vals)
    curve = []
    for t in ts:
        above = n - bisect.bisect_right(vals, t)
        curve.append((t, above / n))
    return curve


def exceedance_at(samples: Iterable[float], threshold: float) -> float:
    vals = list(samples)
    if not vals:
        raise EmptySamplesError("exceedance of empty sample set")
    return sum(1 for v in vals if v > threshold) / len(vals)


def profile_from_samples(
    mechanism: MechanismKind,
    samples_phy: Iterable[float],
    samples_rrc_phy: Iterable[float],
) -> DisruptionProfile:
    """Recompute every profile statistic from paired sample buffers."""
    phy = tuple(samples_phy)
    rrc = tuple(samples_rrc_phy)
    if not phy or len(phy) != len(rrc):
        raise EmptySamplesError("paired sample buffers required")
    for p, r in zip(phy, rrc):
        if p < 0 or r < p:
            raise ValueError(
                "paired samples must satisfy 0 <= phy <= completion per execution"
            )
    sorted_phy = sorted(phy)
    sorted_rrc = sorted(rrc)
    median_phy = _quantile_sorted(sorted_phy, 0.5)
    median_rrc = _quantile_sorted(sorted_rrc, 0.5)
    iqr_rrc = _quantile_sorted(sorted_rrc, 0.75) - _quantile_sorted(sorted_rrc, 0.25)
    try:
        rel_var = relative_variability(rrc)
    except ZeroMedianError:
        rel_var = None
    amp = median_rrc / median_phy if median_phy > _ZERO_EPS else None
    return DisruptionProfile(
        mechanism=mechanism,
        n=len(phy),
        samples_phy=phy,
        samples_rrc_phy=rrc,
        mean_phy=math.fsum(phy) / len(phy),
        t95_phy=_quantile_sorted(sorted_phy, 0.95),
        median_phy=median_phy,
        median_rrc_phy=median_rrc,
        iqr_rrc_phy=iqr_rrc,
        rel_variability=rel_var,
        amp_ratio=amp,
    )


def build_profile(
    mechanism: MechanismKind, decomps: Iterable[LatencyDecomposition]
) -> DisruptionProfile:
    """Build a profile from latency decompositions of one mechanism."""
    ds = list(decomps)
    if not ds:
        raise EmptySamplesError(f"no decompositions for {mechanism.value}")
    return profile_from_samples(
        mechanism,
        (d.t_phy_ms for d in ds),
        (d.t_rrc_phy_ms for d in ds),
    )


@dataclass(frozen=True)
class ProfileStore:
    """Immutable snapshot of per-mechanism profiles.

    `window` caps retained samples per mechanism (FIFO eviction); mechanisms
    with fewer than `min_n` samples, or with degenerate statistics, are not
    policy-eligible.
    """

    profiles: Mapping[MechanismKind, DisruptionProfile] = field(
        default_factory=lambda: MappingProxyType({})
    )
    window: int = DEFAULT_WINDOW
    min_n: int = DEFAULT_MIN_SAMPLES

    def __post_init__(self) -> None:
        if self.window < 1 or self.min_n < 1:
            raise ValueError("window and min_n must be positive")
        for profile in self.profiles.values():
            if profile.n > self.window:
                raise ValueError("profile exceeds retention window")

    def get(self, mechanism: MechanismKind) -> DisruptionProfile | None:
        return self.profiles.get(mechanism)

    def eligible(self, mechanism: MechanismKind) -> bool:
        p = self.profiles.get(mechanism)
        return p is not None and p.n >= self.min_n and p.rel_variability is not None

    def eligible_mechanisms(self) -> tuple[MechanismKind, ...]:
        return tuple(
            m for m in sorted(self.profiles, key=lambda k: k.value) if self.eligible(m)
        )


def empty_store(
    window: int = DEFAULT_WINDOW, min_n: int = DEFAULT_MIN_SAMPLES
) -> ProfileStore:
    return ProfileStore(MappingProxyType({}), window, min_n)


def refresh(
    store: ProfileStore,
    new_decomps: Iterable[tuple[MechanismKind, LatencyDecomposition]],
) -> ProfileStore:
    """Append samples per mechanism, evict beyond the window, recompute stats.

    Returns a new snapshot; the input store remains valid and unchanged.
    """
    incoming: dict[MechanismKind, list[tuple[float, float]]] = {}
    for mechanism, decomp in new_decomps:
        incoming.setdefault(mechanism, []).append(
            (decomp.t_phy_ms, decomp.t_rrc_phy_ms)
        )
    if not incoming:
        return store

    profiles = dict(store.profiles)
    for mechanism, pairs in incoming.items():
        old = profiles.get(mechanism)
        phy = list(old.samples_phy) if old else []
        rrc = list(old.samples_rrc_phy) if old else []
        phy.extend(p for p, _ in pairs)
        rrc.extend(r for _, r in pairs)
        phy = phy[-store.window :]
        rrc = rrc[-store.window :]
        profiles[mechanism] = profile_from_samples(mechanism, phy, rrc)
    return ProfileStore(MappingProxyType(profiles), store.window, store.min_n)


def build_store(
    pairs: Iterable[tuple[MechanismKind, LatencyDecomposition]],
    window: int = DEFAULT_WINDOW,
    min_n: int = DEFAULT_MIN_SAMPLES,
) -> ProfileStore:
    return refresh(empty_store(window, min_n), pairs)


def export_store(store: ProfileStore) -> dict:
    """JSON document with sample buffers and derived statistics per mechanism."""
    return {
        "window": store.window,
        "min_n": store.min_n,
        "profiles": {
            m.value: {
                "n": p.n,
                "samples_phy": list(p.samples_phy),
                "samples_rrc_phy": list(p.samples_rrc_phy),
                "mean_phy": p.mean_phy,
                "t95_phy": p.t95_phy,
                "median_phy": p.median_phy,
                "median_rrc_phy": p.median_rrc_phy,
                "iqr_rrc_phy": p.iqr_rrc_phy,
                "rel_variability": p.rel_variability,
                "amp_ratio": p.amp_ratio,
                "eligible": store.eligible(m),
            }
            for m, p in sorted(store.profiles.items(), key=lambda kv: kv[0].value)
        },
    }


def import_store(doc: dict) -> ProfileStore:
    """Rebuild a store from an exported document.

    Statistics are recomputed from the sample buffers; if the document also
    carries stats they must match the recomputation.
    """
    try:
        window = int(doc.get("window", DEFAULT_WINDOW))
        min_n = int(doc.get("min_n", DEFAULT_MIN_SAMPLES))
        raw_profiles = doc["profiles"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileImportError(f"bad store document: {exc}") from None

    profiles: dict[MechanismKind, DisruptionProfile] = {}
    for mech_id, entry in raw_profiles.items():
        try:
            mechanism = MechanismKind(mech_id)
            phy = [float(v) for v in entry["samples_phy"]]
            rrc = [float(v) for v in entry["samples_rrc_phy"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProfileImportError(f"bad profile entry {mech_id!r}: {exc}") from None
        profile = profile_from_samples(mechanism, phy, rrc)
        for key in ("mean_phy", "t95_phy", "median_phy", "median_rrc_phy"):
            if key in entry and not _close(entry[key], getattr(profile, key)):
                raise ProfileImportError(
                    f"{mech_id}.{key} does not match recomputation from buffers"
                )
        profiles[mechanism] = profile
    return ProfileStore(MappingProxyType(profiles), window, min_n)


def _close(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(float(a), float(b), rel_tol=1e-9, abs_tol=1e-9)
