"""Brute-force ground truth: global argmax, deviation gains, local maximizers,
empirical smoothness constants.

Definitions (f any reward source over the space):

    g1(a) = max over feasible directions u of          f(a^(u))   - f(a)
    g2(a) = max over feasible distinct-agent pairs of  f(a^(u,v)) - f(a)

a is an (eps1, eps2)-local maximizer iff g1 <= eps1 and g2 <= eps2.  For
n = 1 no pair exists and g2 = -inf, so locality degenerates to one-agent
optimality.

Everything here enumerates exactly (no sampling) and refuses to run past an
enumeration cap.  The per-action loops and the vectorized whole-space tables
are cross-checked against each other in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import Direction, JointAction, JointActionSpace, apply_direction, apply_pair
from .errors import EnumerationCapError
from .matgame import PayoffTensor

DEFAULT_ENUM_CAP = 10_000_000


@dataclass(frozen=True)
class LocalOptimalityReport:
    action: JointAction
    value: float
    g1: float
    g2: float
    eps1: float
    eps2: float

    @property
    def is_local_maximizer(self) -> bool:
        return self.g1 <= self.eps1 and self.g2 <= self.eps2

    def to_dict(self) -> dict:
        return {
            "action": list(self.action),
            "value": self.value,
            "g1": self.g1,
            "g2": None if math.isinf(self.g2) else self.g2,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "is_local_maximizer": self.is_local_maximizer,
        }


@dataclass(frozen=True)
class SmoothnessReport:
    """Empirical maxima of first/second/third difference magnitudes."""

    zeta1: float
    zeta2: float
    zeta3: float

    def to_dict(self) -> dict:
        return {"zeta1": self.zeta1, "zeta2": self.zeta2, "zeta3": self.zeta3}


def _resolve(f, space: JointActionSpace | None):
    if isinstance(f, PayoffTensor):
        return f.reward, f.space, f
    if space is None:
        raise ValueError("a callable reward source needs an explicit space")
    return f, space, None


def _check_cap(space: JointActionSpace, cap: int, what: str) -> None:
    if space.size > cap:
        raise EnumerationCapError(
            f"{what} would enumerate {space.size} > cap {cap} actions",
            size=space.size,
            cap=cap,
        )


def dense_landscape(
    f, space: JointActionSpace | None = None, cap: int = DEFAULT_ENUM_CAP
) -> np.ndarray:
    """All rewards as an array of shape (d,)*n (axis i = agent i)."""
    fn, space, tensor = _resolve(f, space)
    _check_cap(space, cap, "dense landscape")
    shape = (space.d,) * space.n
    if tensor is not None:
        return tensor.reward_by_index(np.arange(space.size, dtype=np.int64)).reshape(shape)
    flat = np.fromiter(
        (fn(a) for a in space.iter_actions()), dtype=np.float64, count=space.size
    )
    return flat.reshape(shape)


def _best_excluding_self(values: np.ndarray, axis: int) -> np.ndarray:
    """max over j != own-slot along `axis`, elementwise (top-2 order statistics)."""
    m1 = values.max(axis=axis, keepdims=True)
    m2 = np.partition(values, values.shape[axis] - 2, axis=axis).take(
        [values.shape[axis] - 2], axis=axis
    )
    count = (values == m1).sum(axis=axis, keepdims=True)
    own_is_unique_max = (values == m1) & (count == 1)
    return np.where(own_is_unique_max, m2, m1)


def deviation_gain_tables(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(G1, G2) over the whole space from a dense landscape, exact and vectorized.

    G2 uses max over pairs of axes (i, k) of the best entry with both
    coordinates deviated; the row/column self-exclusions compose: first
    exclude the own row per column, then the own column of the row-maxima.
    """
    n = values.ndim
    g1 = np.full(values.shape, -np.inf)
    for i in range(n):
        g1 = np.maximum(g1, _best_excluding_self(values, axis=i) - values)
    g2 = np.full(values.shape, -np.inf)
    for i in range(n):
        best_rows = _best_excluding_self(values, axis=i)
        for k in range(i + 1, n):
            best = _best_excluding_self(best_rows, axis=k)
            g2 = np.maximum(g2, best - values)
    return g1, g2


def deviation_gains(
    f, a: JointAction, space: JointActionSpace | None = None
) -> tuple[float, float]:
    """(g1, g2) at one action by direct enumeration of its neighborhood."""
    fn, space, _ = _resolve(f, space)
    space.validate(a)
    base = float(fn(a))
    g1 = -np.inf
    for i in range(space.n):
        for j in range(space.d):
            if j == a[i]:
                continue
            g1 = max(g1, float(fn(apply_direction(a, Direction(i, j), space))) - base)
    g2 = -np.inf
    for i in range(space.n):
        for k in range(i + 1, space.n):
            for j in range(space.d):
                if j == a[i]:
                    continue
                for l in range(space.d):
                    if l == a[k]:
                        continue
                    b = apply_pair(a, Direction(i, j), Direction(k, l), space)
                    g2 = max(g2, float(fn(b)) - base)
    return float(g1), float(g2)


def local_optimality_report(
    f, a: JointAction, eps1: float, eps2: float, space: JointActionSpace | None = None
) -> LocalOptimalityReport:
    fn, space, _ = _resolve(f, space)
    g1, g2 = deviation_gains(f, a, space)
    return LocalOptimalityReport(
        action=tuple(a), value=float(fn(a)), g1=g1, g2=g2, eps1=float(eps1), eps2=float(eps2)
    )


def global_argmax(
    f, space: JointActionSpace | None = None, cap: int = DEFAULT_ENUM_CAP
) -> tuple[JointAction, float]:
    """Exact maximizer; ties resolved to the smallest linear index."""
    _, space, _ = _resolve(f, space)
    values = dense_landscape(f, space, cap).reshape(-1)
    idx = int(np.argmax(values))  # first occurrence = smallest linear index
    return space.action_at(idx), float(values[idx])


def local_maximizer_set(
    f,
    eps1: float,
    eps2: float,
    space: JointActionSpace | None = None,
    cap: int = DEFAULT_ENUM_CAP,
) -> list[JointAction]:
    """All (eps1, eps2)-local maximizers, sorted by linear index."""
    _, space, _ = _resolve(f, space)
    values = dense_landscape(f, space, cap)
    g1, g2 = deviation_gain_tables(values)
    mask = (g1 <= eps1) & (g2 <= eps2)
    return [space.action_at(int(i)) for i in np.flatnonzero(mask.reshape(-1))]


def estimate_smoothness(
    f, space: JointActionSpace | None = None, cap: int = DEFAULT_ENUM_CAP
) -> SmoothnessReport:
    """Exact empirical smoothness constants by full enumeration.

    zeta1: max |f(a^(u)) - f(a)| over feasible directions.
    zeta2: max |mixed second difference| over distinct-agent pairs.
    zeta3: max |third difference of the mixed second difference| where the
           third direction's agent differs from both pair agents (empty for
           n <= 2, reported as 0).

    Slices along infeasible (target == current) directions contribute exact
    zeros, which never change the maxima, so the tensor algebra below ranges
    over all targets.
    """
    _, space, _ = _resolve(f, space)
    values = dense_landscape(f, space, cap)
    n, d = space.n, space.d
    zeta1 = 0.0
    for i in range(n):
        for j in range(d):
            shifted = np.take(values, [j], axis=i)
            zeta1 = max(zeta1, float(np.max(np.abs(shifted - values))))
    zeta2 = 0.0
    zeta3 = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(d):
                v_j = np.take(values, [j], axis=i)
                for l in range(d):
                    v_l = np.take(values, [l], axis=k)
                    v_jl = np.take(v_j, [l], axis=k)
                    d2 = v_jl - v_j - v_l + values  # broadcasts to full shape
                    zeta2 = max(zeta2, float(np.max(np.abs(d2))))
                    for m in range(n):
                        if m == i or m == k:
                            continue
                        for pp in range(d):
                            d3 = np.take(d2, [pp], axis=m) - d2
                            zeta3 = max(zeta3, float(np.max(np.abs(d3))))
    return SmoothnessReport(zeta1=zeta1, zeta2=zeta2, zeta3=zeta3)


def epsilon2_threshold(eps: float, zeta3: float) -> float:
    """Pair threshold implied by the theory bridge: 6 * sqrt(zeta3) * eps."""
    if eps < 0 or zeta3 < 0:
        raise ValueError("eps and zeta3 must be nonnegative")
    return 6.0 * math.sqrt(zeta3) * eps


def randomized_smoothness_lower_bound(
    f,
    samples: int,
    rng: np.random.Generator,
    space: JointActionSpace | None = None,
) -> SmoothnessReport:
    """Sampled maxima over random (a, u, v, w) tuples; a lower bound on the
    exhaustive constants, used to sanity-check estimate_smoothness."""
    fn, space, _ = _resolve(f, space)
    zeta1 = zeta2 = zeta3 = 0.0
    for _ in range(samples):
        a = space.random_action(rng)
        i = int(rng.integers(space.n))
        j = int(rng.integers(space.d - 1))
        j += j >= a[i]
        u = Direction(i, j)
        zeta1 = max(zeta1, abs(float(fn(apply_direction(a, u, space))) - float(fn(a))))
        if space.n < 2:
            continue
        k = int(rng.integers(space.n - 1))
        k += k >= i
        l = int(rng.integers(space.d - 1))
        l += l >= a[k]
        v = Direction(k, l)
        d2_a = _mixed_second(fn, space, a, u, v)
        zeta2 = max(zeta2, abs(d2_a))
        others = [m for m in range(space.n) if m not in (i, k)]
        if not others:
            continue
        m = others[int(rng.integers(len(others)))]
        p = int(rng.integers(space.d - 1))
        p += p >= a[m]
        aw = apply_direction(a, Direction(m, p), space)
        zeta3 = max(zeta3, abs(_mixed_second(fn, space, aw, u, v) - d2_a))
    return SmoothnessReport(zeta1=zeta1, zeta2=zeta2, zeta3=zeta3)


def _mixed_second(fn, space, a, u, v) -> float:
    return (
        float(fn(apply_pair(a, u, v, space)))
        - float(fn(apply_direction(a, u, space)))
        - float(fn(apply_direction(a, v, space)))
        + float(fn(a))
    )
