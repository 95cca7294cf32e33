"""Unstructured bandit baselines over the full joint-action space.

flat UCB:     classic UCB1 over all d**n arms with optimistic initialization
              (every arm is pulled once, in seeded random order, before the
              index rule takes over).  Random sweep order avoids the payoff
              bias of index order, whose low indices correlate with low
              linear base rewards.

sampled pUCT: prior-weighted UCT over a uniformly sampled candidate subset.
              sample_count draws with replacement define the subset and the
              empirical frequency beta-hat; with a uniform prior the
              importance-corrected bonus weight reduces to count/sample_count.
              When sample_count >= |A| the subset is exhaustive and the
              weight is constant (full-pUCT behavior).

full pUCT:    independent reference loop over all arms with uniform prior,
              kept separate so the exhaustive sampled mode has something
              honest to be compared against.

Both run on horizon-1 games only and produce the same SearchTrace shape as
the planner (xi absent, incumbent = argmax of empirical mean so far).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import JointAction
from .errors import EnumerationCapError
from .matgame import EpisodicMatGame, PayoffTensor
from .trace import SearchTrace, TraceStep

FLAT_UCB_ARM_CAP = 10_000_000


@dataclass(frozen=True)
class BaselineConfig:
    mode: str = "flat_ucb"  # "flat_ucb" | "sampled_puct" | "full_puct"
    exploration_const: float = math.sqrt(2.0)
    sample_count: int = 3

    def __post_init__(self) -> None:
        if self.mode not in ("flat_ucb", "sampled_puct", "full_puct"):
            raise ValueError(f"unknown baseline mode {self.mode!r}")
        if not self.exploration_const > 0:
            raise ValueError("exploration_const must be positive")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def _tensor_of(env: "PayoffTensor | EpisodicMatGame") -> PayoffTensor:
    if isinstance(env, EpisodicMatGame):
        if env.horizon != 1:
            raise ValueError("bandit baselines only run on horizon-1 games")
        return env.tensor
    return env


def run_flat_ucb(
    env: "PayoffTensor | EpisodicMatGame",
    budget: int,
    exploration_const: float = math.sqrt(2.0),
    rng: "np.random.Generator | int | None" = None,
) -> SearchTrace:
    """UCB1 over the fully enumerated arm set.

    While unpulled arms remain the next one comes from a seeded random
    permutation (optimistic initialization); afterwards the index
    Q + c * sqrt(2 ln t / N) decides, ties to the smallest arm index.
    """
    tensor = _tensor_of(env)
    space = tensor.space
    size = space.size
    if size > FLAT_UCB_ARM_CAP:
        raise EnumerationCapError(
            f"flat UCB needs an enumerable arm set; {size} > {FLAT_UCB_ARM_CAP}",
            size=size, cap=FLAT_UCB_ARM_CAP,
        )
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    trace = SearchTrace(planner="flat_ucb", budget=budget, env_config=tensor.to_config())

    counts = np.zeros(size, dtype=np.int64)
    means = np.zeros(size, dtype=np.float64)
    sweep = rng.permutation(size)
    best_idx = -1
    best_val = -np.inf
    for t in range(1, budget + 1):
        if t <= size:
            arm = int(sweep[t - 1])
        else:
            bonus = exploration_const * np.sqrt(2.0 * math.log(t) / counts)
            arm = int(np.argmax(means + bonus))  # first max = smallest index
        r = tensor.reward(space.action_at(arm))
        trace.env_reward_queries += 1
        counts[arm] += 1
        means[arm] += (r - means[arm]) / counts[arm]
        if means[arm] > best_val:
            best_val = float(means[arm])
            best_idx = arm
        inc = space.action_at(best_idx)
        trace.steps.append(
            TraceStep(t=t, action=space.action_at(arm), reward=float(r),
                      incumbent=inc, incumbent_value=best_val)
        )
    return trace


def _puct_loop(
    tensor: PayoffTensor,
    arms: np.ndarray,
    weight: np.ndarray,
    budget: int,
    exploration_const: float,
    planner: str,
) -> SearchTrace:
    """Shared pUCT iteration: Q + c * weight * sqrt(total N) / (1 + N)."""
    space = tensor.space
    trace = SearchTrace(planner=planner, budget=budget, env_config=tensor.to_config())
    m = len(arms)
    counts = np.zeros(m, dtype=np.int64)
    means = np.zeros(m, dtype=np.float64)
    rewards = np.array(
        [tensor.reward(space.action_at(int(i))) for i in arms], dtype=np.float64
    )
    best_pos = -1
    best_val = -np.inf
    total = 0
    for t in range(1, budget + 1):
        scores = means + exploration_const * weight * math.sqrt(total) / (1.0 + counts)
        pos = int(np.argmax(scores))
        r = float(rewards[pos])
        trace.env_reward_queries += 1
        counts[pos] += 1
        total += 1
        means[pos] += (r - means[pos]) / counts[pos]
        if means[pos] > best_val:
            best_val = float(means[pos])
            best_pos = pos
        trace.steps.append(
            TraceStep(
                t=t,
                action=space.action_at(int(arms[pos])),
                reward=r,
                incumbent=space.action_at(int(arms[best_pos])),
                incumbent_value=best_val,
            )
        )
    return trace


def run_sampled_puct(
    env: "PayoffTensor | EpisodicMatGame",
    budget: int,
    sample_count: int = 3,
    exploration_const: float = math.sqrt(2.0),
    rng: "np.random.Generator | int | None" = None,
) -> SearchTrace:
    """pUCT over a uniform random candidate subset with importance correction.

    sample_count >= |A| switches to the exhaustive arm set with uniform
    weights, matching the full-pUCT reference exactly.
    """
    tensor = _tensor_of(env)
    space = tensor.space
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if sample_count >= space.size:
        arms = np.arange(space.size, dtype=np.int64)
        weight = np.full(len(arms), 1.0 / space.size)
    else:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        draws = rng.integers(0, space.size, size=sample_count)
        arms, multiplicity = np.unique(draws, return_counts=True)
        # uniform prior 1/|A| times the ratio beta-hat/beta collapses to beta-hat
        weight = multiplicity / float(sample_count)
    return _puct_loop(tensor, arms, weight, budget, exploration_const, "sampled_puct")


def run_full_puct(
    env: "PayoffTensor | EpisodicMatGame",
    budget: int,
    exploration_const: float = math.sqrt(2.0),
    rng: "np.random.Generator | int | None" = None,
) -> SearchTrace:
    """Reference pUCT over every arm with the uniform prior 1/|A|."""
    tensor = _tensor_of(env)
    space = tensor.space
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if space.size > FLAT_UCB_ARM_CAP:
        raise EnumerationCapError(
            f"full pUCT needs an enumerable arm set; {space.size} > {FLAT_UCB_ARM_CAP}",
            size=space.size, cap=FLAT_UCB_ARM_CAP,
        )
    arms = np.arange(space.size, dtype=np.int64)
    weight = np.full(len(arms), 1.0 / space.size)
    return _puct_loop(tensor, arms, weight, budget, exploration_const, "full_puct")
