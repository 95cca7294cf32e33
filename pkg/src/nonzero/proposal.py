"""Interaction-guided candidate proposals from the fitted surrogate.

Given a node's surrogate parameters and its current best candidate (the
base), rank

* single-agent deviations by the predicted first difference of eta, and
* distinct-agent pair deviations by the predicted full two-step gain
  eta(base^(u,v)) - eta(base), with the mixed second difference carried
  alongside as a diagnostic.

propose() takes the top k_single singles and top k_pair pairs that are not
already candidates, subject to the node's candidate cap (lowest scores are
dropped first).  Pair enumeration is exhaustive up to pair_sample_budget
distinct pairs, sampled uniformly beyond that.

Scores depend on theta only through per-agent column sums, so builders work
on (n, d) views of theta and never materialize encodings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection

import numpy as np

from .actions import Direction, JointAction, JointActionSpace
from .surrogate import SurrogateParams, link_value

DEFAULT_PAIR_SAMPLE_BUDGET = 4096


@dataclass(frozen=True)
class ProposalConfig:
    k_single: int = 2
    k_pair: int = 2
    pair_sample_budget: int = DEFAULT_PAIR_SAMPLE_BUDGET
    candidate_cap: int = 16

    def __post_init__(self) -> None:
        if self.k_single < 0 or self.k_pair < 0:
            raise ValueError("proposal counts must be nonnegative")
        if self.pair_sample_budget < 1:
            raise ValueError("pair_sample_budget must be >= 1")
        if self.candidate_cap < 1:
            raise ValueError("candidate_cap must be >= 1")
        if self.k_single + self.k_pair > self.candidate_cap:
            raise ValueError("k_single + k_pair must not exceed candidate_cap")


@dataclass(frozen=True)
class ScoredProposal:
    """One ranked deviation from the base action.

    v is None for single-agent proposals; interaction carries the predicted
    mixed second difference for pair proposals (the score itself is the full
    two-step gain).
    """

    candidate: JointAction
    origin: JointAction
    score: float
    u: Direction
    v: Direction | None = None
    interaction: float | None = None

    @property
    def kind(self) -> str:
        return "single" if self.v is None else "pair"


def _theta2d(p: SurrogateParams, space: JointActionSpace) -> np.ndarray:
    if p.theta.shape[0] != space.encoding_dim:
        raise ValueError(
            f"theta has dim {p.theta.shape[0]}, space needs {space.encoding_dim}"
        )
    return p.theta.reshape(space.n, space.d)


def _single_tables(p: SurrogateParams, space: JointActionSpace, base: JointAction):
    """Gain table over all (agent, target); own-column entries are -inf."""
    th = _theta2d(p, space)
    base_idx = np.asarray(base, dtype=np.int64)
    own = th[np.arange(space.n), base_idx]
    z_base = float(own.sum())
    z_new = z_base - own[:, None] + th
    gains = link_value(p, z_new) - link_value(p, z_base)
    gains[np.arange(space.n), base_idx] = -np.inf
    return gains, z_base


def score_singles(
    p: SurrogateParams, space: JointActionSpace, base: JointAction
) -> list[ScoredProposal]:
    """All n*(d-1) single deviations, best predicted gain first, ties by (agent, target)."""
    space.validate(base)
    gains, _ = _single_tables(p, space, base)
    agents, targets = np.nonzero(np.isfinite(gains))
    flat = gains[agents, targets]
    order = np.lexsort((targets, agents, -flat))
    out = []
    for q in order:
        i, j = int(agents[q]), int(targets[q])
        cand = list(base)
        cand[i] = j
        out.append(
            ScoredProposal(
                candidate=tuple(cand),
                origin=tuple(base),
                score=float(flat[q]),
                u=Direction(i, j),
            )
        )
    return out


def _agent_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, k) for i in range(n) for k in range(i + 1, n)]


def pair_count(space: JointActionSpace) -> int:
    """Number of unordered distinct-agent pair deviations from any base."""
    return (space.n * (space.n - 1) // 2) * (space.d - 1) ** 2


def _pair_arrays(
    p: SurrogateParams,
    space: JointActionSpace,
    base: JointAction,
    rng: np.random.Generator | None,
    budget: int,
):
    """Flat arrays (i, j, k, l, score, interaction) over enumerated or sampled pairs.

    Enumeration order is (agent pair, target offset, target offset), which is
    also the deterministic tie order used by samplers and tests.
    """
    th = _theta2d(p, space)
    n, d = space.n, space.d
    base_idx = np.asarray(base, dtype=np.int64)
    own = th[np.arange(n), base_idx]
    z_base = float(own.sum())
    pairs = _agent_pairs(n)
    total = pair_count(space)
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty, empty, np.empty(0), np.empty(0)

    # target tables with the own column removed, one row per agent
    tgt = np.empty((n, d - 1), dtype=np.int64)
    for i in range(n):
        tgt[i] = [j for j in range(d) if j != base[i]]

    if total <= budget:
        chosen = np.arange(total, dtype=np.int64)
    else:
        if rng is None:
            raise ValueError("sampling pair proposals past the budget needs an rng")
        seen: set[int] = set()
        # budget << total in the sampled regime, so rejection terminates fast
        while len(seen) < budget:
            draws = rng.integers(0, total, size=budget - len(seen))
            for q in draws:
                seen.add(int(q))
        chosen = np.fromiter(sorted(seen), dtype=np.int64, count=len(seen))

    per_pair = (d - 1) * (d - 1)
    ap = chosen // per_pair
    rem = chosen % per_pair
    j_off = rem // (d - 1)
    l_off = rem % (d - 1)
    pair_arr = np.asarray(pairs, dtype=np.int64)
    i_arr = pair_arr[ap, 0]
    k_arr = pair_arr[ap, 1]
    j_arr = tgt[i_arr, j_off]
    l_arr = tgt[k_arr, l_off]

    z_u = z_base - own[i_arr] + th[i_arr, j_arr]
    z_v = z_base - own[k_arr] + th[k_arr, l_arr]
    z_uv = z_u - own[k_arr] + th[k_arr, l_arr]
    eta_base = link_value(p, z_base)
    scores = link_value(p, z_uv) - eta_base
    interactions = link_value(p, z_uv) - link_value(p, z_u) - link_value(p, z_v) + eta_base
    return i_arr, j_arr, k_arr, l_arr, scores, interactions


def score_pairs(
    p: SurrogateParams,
    space: JointActionSpace,
    base: JointAction,
    rng: np.random.Generator | None = None,
    budget: int = DEFAULT_PAIR_SAMPLE_BUDGET,
) -> list[ScoredProposal]:
    """Pair deviations ranked by predicted full gain, ties by candidate linear index."""
    space.validate(base)
    if space.n < 2:
        return []
    i_arr, j_arr, k_arr, l_arr, scores, interactions = _pair_arrays(
        p, space, base, rng, budget
    )
    if len(scores) == 0:
        return []
    lin = _pair_candidate_linidx(space, base, i_arr, j_arr, k_arr, l_arr)
    order = np.lexsort((lin, -scores))
    out = []
    for q in order:
        cand = list(base)
        cand[int(i_arr[q])] = int(j_arr[q])
        cand[int(k_arr[q])] = int(l_arr[q])
        out.append(
            ScoredProposal(
                candidate=tuple(cand),
                origin=tuple(base),
                score=float(scores[q]),
                u=Direction(int(i_arr[q]), int(j_arr[q])),
                v=Direction(int(k_arr[q]), int(l_arr[q])),
                interaction=float(interactions[q]),
            )
        )
    return out


def _pair_candidate_linidx(space, base, i_arr, j_arr, k_arr, l_arr) -> np.ndarray:
    n, d = space.n, space.d
    weights = d ** np.arange(n - 1, -1, -1, dtype=np.float64)
    base_lin = float(np.dot(np.asarray(base, dtype=np.float64), weights))
    base_arr = np.asarray(base, dtype=np.float64)
    out = (
        base_lin
        + (j_arr - base_arr[i_arr]) * weights[i_arr]
        + (l_arr - base_arr[k_arr]) * weights[k_arr]
    )
    return out


def best_candidate(
    p: SurrogateParams, space: JointActionSpace, candidates: Collection[JointAction]
) -> JointAction:
    """argmax of eta over the candidates, ties to the smallest linear index."""
    if not candidates:
        raise ValueError("need at least one candidate")
    th = _theta2d(p, space)
    rows = np.asarray(list(candidates), dtype=np.int64)
    z = th[np.arange(space.n)[None, :], rows].sum(axis=1)
    lin = rows.astype(np.float64) @ (
        np.asarray(space.d, dtype=np.float64) ** np.arange(space.n - 1, -1, -1)
    )
    best = int(np.lexsort((lin, -z))[0])
    return tuple(int(x) for x in rows[best])


def propose(
    p: SurrogateParams,
    space: JointActionSpace,
    node_candidates: Collection[JointAction],
    cfg: ProposalConfig,
    rng: np.random.Generator | None = None,
) -> list[JointAction]:
    """New candidates to add to the node, ordered best-first, duplicate-free.

    Semantically a set; the deterministic order (score desc, then candidate
    linear index) makes caps and downstream tie-breaks reproducible.
    """
    existing = set(node_candidates)
    if not existing:
        raise ValueError("node must already hold at least one candidate")
    room = cfg.candidate_cap - len(existing)
    if room <= 0 or (cfg.k_single == 0 and cfg.k_pair == 0):
        return []
    base = best_candidate(p, space, existing)

    picked: list[tuple[float, float, JointAction]] = []  # (-score, linidx, cand)
    if cfg.k_single > 0:
        gains, _ = _single_tables(p, space, base)
        agents, targets = np.nonzero(np.isfinite(gains))
        flat = gains[agents, targets]
        order = np.lexsort((targets, agents, -flat))
        taken = 0
        for q in order:
            if taken >= cfg.k_single:
                break
            cand = list(base)
            cand[int(agents[q])] = int(targets[q])
            cand_t = tuple(cand)
            if cand_t in existing:
                continue
            picked.append((-float(flat[q]), float(space.linear_index(cand_t)), cand_t))
            taken += 1
    if cfg.k_pair > 0 and space.n >= 2:
        i_arr, j_arr, k_arr, l_arr, scores, _ = _pair_arrays(
            p, space, base, rng, cfg.pair_sample_budget
        )
        if len(scores):
            lin = _pair_candidate_linidx(space, base, i_arr, j_arr, k_arr, l_arr)
            order = np.lexsort((lin, -scores))
            taken = 0
            for q in order:
                if taken >= cfg.k_pair:
                    break
                cand = list(base)
                cand[int(i_arr[q])] = int(j_arr[q])
                cand[int(k_arr[q])] = int(l_arr[q])
                cand_t = tuple(cand)
                if cand_t in existing:
                    continue
                picked.append((-float(scores[q]), float(lin[q]), cand_t))
                taken += 1

    picked.sort()
    out: list[JointAction] = []
    for _, _, cand_t in picked[:room]:
        if cand_t not in out:  # singles and pairs cannot collide, but stay safe
            out.append(cand_t)
    return out
