"""Regret accounting, asymptotic slopes, hitting-time separation, and the
smoothness-to-bound bridge.

Two cumulative regret forms over a trajectory of selected actions a_t and an
oracle local-maximizer set L:

* indicator regret: R_T = sum of 1[a_t not in L]
* gap regret:       sum of max(0, f(m_t) - f(a_t)) where m_t is the local
  maximizer nearest to a_t in Hamming distance (ties to the higher value)

Slopes are least-squares fits of log R_t against log t over a window; a
sublinear trajectory shows slope < 1.

Hitting-time separation compares the first time two trajectories enter L,
with censored runs scored as budget + 1 (so ratios against a censored
baseline are lower bounds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from .actions import JointAction
from .oracle import SmoothnessReport, epsilon2_threshold
from .trace import SearchTrace


def _actions_of(trace_or_actions) -> list[JointAction]:
    if isinstance(trace_or_actions, SearchTrace):
        return trace_or_actions.actions()
    return [tuple(a) for a in trace_or_actions]


def indicator_regret(
    trace_or_actions, local_set: Collection[JointAction]
) -> np.ndarray:
    """Cumulative count of steps outside the local-maximizer set."""
    actions = _actions_of(trace_or_actions)
    members = set(local_set)
    flags = np.fromiter(
        (0.0 if a in members else 1.0 for a in actions), dtype=np.float64,
        count=len(actions),
    )
    return np.cumsum(flags)


def _hamming(a: JointAction, b: JointAction) -> int:
    return sum(x != y for x, y in zip(a, b))


def nearest_local_maximizer(
    a: JointAction, f, local_set: Collection[JointAction]
) -> JointAction:
    """Minimal Hamming distance, ties by higher value, then smaller action."""
    if not local_set:
        raise ValueError("local_set is empty")
    best = None
    best_key = None
    for m in local_set:
        key = (_hamming(a, m), -float(f(m)), tuple(m))
        if best_key is None or key < best_key:
            best_key = key
            best = tuple(m)
    return best


def gap_regret(
    trace_or_actions, f, local_set: Collection[JointAction]
) -> np.ndarray:
    """Cumulative clamped value gap to the nearest local maximizer."""
    actions = _actions_of(trace_or_actions)
    if not local_set:
        raise ValueError("local_set is empty")
    cache: dict[JointAction, float] = {}
    gaps = np.empty(len(actions), dtype=np.float64)
    for i, a in enumerate(actions):
        if a not in cache:
            m = nearest_local_maximizer(a, f, local_set)
            cache[a] = max(0.0, float(f(m)) - float(f(a)))
        gaps[i] = cache[a]
    return np.cumsum(gaps)


def loglog_slope(series: Sequence[float], t_min: int, t_max: int) -> float:
    """Least-squares slope of log series[t] vs log t for t in [t_min, t_max].

    t is 1-based; the window must satisfy t_max >= 10 * t_min and the series
    must be strictly positive inside it.
    """
    series = np.asarray(series, dtype=np.float64)
    if not 1 <= t_min < t_max <= len(series):
        raise ValueError(f"window [{t_min}, {t_max}] out of range for length {len(series)}")
    if t_max < 10 * t_min:
        raise ValueError("slope window must span at least one decade (t_max >= 10 t_min)")
    window = series[t_min - 1 : t_max]
    if np.any(window <= 0):
        raise ValueError("series must be strictly positive inside the slope window")
    ts = np.arange(t_min, t_max + 1, dtype=np.float64)
    slope, _ = np.polyfit(np.log(ts), np.log(window), 1)
    return float(slope)


def hitting_time(trace_or_actions, local_set: Collection[JointAction]) -> int | None:
    """First 1-based t with a_t in the set; None if never."""
    members = set(local_set)
    for t, a in enumerate(_actions_of(trace_or_actions), start=1):
        if a in members:
            return t
    return None


@dataclass(frozen=True)
class SeparationResult:
    """Hitting-time ratio baseline/guided with budget+1 censoring sentinels."""

    ratio: float
    baseline_hit: int
    guided_hit: int
    baseline_censored: bool
    guided_censored: bool

    @property
    def comparable(self) -> bool:
        # both censored: the ratio carries no information
        return not (self.baseline_censored and self.guided_censored)

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio if self.comparable else None,
            "baseline_hit": self.baseline_hit,
            "guided_hit": self.guided_hit,
            "baseline_censored": self.baseline_censored,
            "guided_censored": self.guided_censored,
            "comparable": self.comparable,
        }


def separation_ratio(
    baseline_trace, guided_trace, local_set: Collection[JointAction], budget: int | None = None
) -> SeparationResult:
    """Ratio of first-hitting times into the local set (baseline over guided)."""
    if budget is None:
        budgets = set()
        for tr in (baseline_trace, guided_trace):
            if isinstance(tr, SearchTrace):
                budgets.add(tr.budget)
        if len(budgets) != 1:
            raise ValueError("pass an explicit budget when traces disagree or are bare lists")
        budget = budgets.pop()
    sentinel = budget + 1
    b = hitting_time(baseline_trace, local_set)
    g = hitting_time(guided_trace, local_set)
    b_hit = sentinel if b is None else b
    g_hit = sentinel if g is None else g
    return SeparationResult(
        ratio=b_hit / g_hit,
        baseline_hit=b_hit,
        guided_hit=g_hit,
        baseline_censored=b is None,
        guided_censored=g is None,
    )


@dataclass(frozen=True)
class RegretLedger:
    """Per-step regret bookkeeping for one trajectory."""

    rewards: np.ndarray
    indicators: np.ndarray
    gaps: np.ndarray

    @property
    def cumulative_indicator(self) -> np.ndarray:
        return np.cumsum(self.indicators)

    @property
    def cumulative_gap(self) -> np.ndarray:
        return np.cumsum(self.gaps)

    def to_dict(self) -> dict:
        return {
            "rewards": self.rewards.tolist(),
            "indicators": self.indicators.tolist(),
            "gaps": self.gaps.tolist(),
        }


def build_regret_ledger(trace_or_actions, f, local_set) -> RegretLedger:
    actions = _actions_of(trace_or_actions)
    ind = indicator_regret(actions, local_set)
    gap = gap_regret(actions, f, local_set)
    rewards = np.array([float(f(a)) for a in actions], dtype=np.float64)
    return RegretLedger(
        rewards=rewards,
        indicators=np.diff(ind, prepend=0.0),
        gaps=np.diff(gap, prepend=0.0),
    )


@dataclass(frozen=True)
class TheoryConstants:
    """Bound ingredients derived from measured smoothness constants."""

    zeta1: float
    zeta2: float
    zeta3: float
    eps: float
    eps2: float
    nu: float
    kappa: float
    c1: float

    def to_dict(self) -> dict:
        return {
            "zeta1": self.zeta1, "zeta2": self.zeta2, "zeta3": self.zeta3,
            "eps": self.eps, "eps2": self.eps2, "nu": self.nu,
            "kappa": self.kappa, "c1": self.c1,
        }


def theory_constants(
    report: SmoothnessReport, eps: float, c1: float = 1.0
) -> TheoryConstants:
    """Per-step progress nu and cover count kappa implied by the smoothness report.

        eps2  = 6 sqrt(zeta3) eps
        nu    = c1 * min(eps^2 / (zeta2 + 1), eps^(3/2) / sqrt(zeta3))
        kappa = max(4 zeta2 / eps^2, sqrt(zeta3) / eps^(3/2))

    Branches whose constant is zero are dropped (a linear landscape has
    zeta2 = zeta3 = 0, leaving nu = c1 eps^2 and kappa = 0).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    z2, z3 = report.zeta2, report.zeta3
    if z2 < 0 or z3 < 0:
        raise ValueError("smoothness constants must be nonnegative")
    eps2 = epsilon2_threshold(eps, z3)
    nu_branches = [eps**2 / (z2 + 1.0)]
    if z3 > 0:
        nu_branches.append(eps**1.5 / math.sqrt(z3))
    kappa_branches = [4.0 * z2 / eps**2]
    if z3 > 0:
        kappa_branches.append(math.sqrt(z3) / eps**1.5)
    return TheoryConstants(
        zeta1=report.zeta1, zeta2=z2, zeta3=z3, eps=eps, eps2=eps2,
        nu=c1 * min(nu_branches), kappa=max(kappa_branches), c1=c1,
    )


def local_regret_bound(kappa: float, total_steps: int, regret_sum: float, c_const: float) -> float:
    """Guided-search bound shape (1 + C sqrt(4 T R_T)) * kappa, for reporting."""
    return (1.0 + c_const * math.sqrt(4.0 * total_steps * regret_sum)) * kappa
