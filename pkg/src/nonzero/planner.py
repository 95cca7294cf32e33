"""Candidate-set Monte Carlo tree search guided by the return surrogate.

Each node keeps a bounded candidate set C instead of branching over all d**n
joint actions.  One simulation:

  select  argmax over C(node) of eta(theta_node, a), ties to the smallest
          linear action index, descending while expanded children exist
  expand  first visit to a node fills C with uniform random legal actions
          plus the parent's chosen action, up to the configured size
  backup  leaf-to-root: visit/value stats update, then one supervision
          sample anchored at the selected candidate (or a uniformly picked
          one, per config; targets are the true rewards of a, a^(u), a^(v),
          a^(u,v) for a random distinct-agent pair), a few SGD steps on
          theta, and finally interaction-guided proposals append new
          candidates within the cap

The per-step composite error xi (squared 4-component residual, computed
with the pre-update theta) goes into the trace together with the selected
root action and the current incumbent (argmax-eta root candidate).

Horizon-1 games are plain deterministic bandits; EpisodicMatGame wrappers
with horizon > 1 reuse the same loop with discounted returns.  Flat UCB and
sampled pUCT baselines live in baselines.py.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import (
    Direction,
    JointAction,
    JointActionSpace,
    apply_direction,
    apply_pair,
    sample_direction_pair,
)
from .errors import InvalidActionError
from .matgame import EpisodicMatGame, PayoffTensor
from .proposal import ProposalConfig, propose
from .surrogate import (
    SurrogateParams,
    composite_error,
    eta,
    link_value,
    sgd_step,
    supervision_from_reward,
)
from .trace import ExpansionRecord, SearchTrace, TraceStep

_SELECTION_MODES = ("eta", "eta_visit")
_WARM_STARTS = ("parent_copy", "zero")
_ANCHOR_MODES = ("selected", "uniform")


@dataclass(frozen=True)
class PlannerConfig:
    n_sim: int
    proposal: ProposalConfig = field(default_factory=ProposalConfig)
    learning_rate: float = 0.05
    grad_steps_per_backup: int = 1
    discount: float = 1.0
    selection_mode: str = "eta"
    exploration_const: float = 1.0
    warm_start: str = "parent_copy"
    init_candidates: int = 3
    root_candidates: tuple[JointAction, ...] | None = None
    anchor_mode: str = "selected"
    link: str = "asinh"
    link_c: float = 1.0
    link_alpha: float = 1.0
    theta_snapshot_every: int = 0

    def __post_init__(self) -> None:
        if self.n_sim < 1:
            raise ValueError(f"n_sim must be >= 1, got {self.n_sim}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.grad_steps_per_backup < 0:
            raise ValueError("grad_steps_per_backup must be >= 0")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.selection_mode not in _SELECTION_MODES:
            raise ValueError(f"selection_mode must be one of {_SELECTION_MODES}")
        if self.warm_start not in _WARM_STARTS:
            raise ValueError(f"warm_start must be one of {_WARM_STARTS}")
        if self.init_candidates < 1:
            raise ValueError("init_candidates must be >= 1")
        if self.exploration_const < 0:
            raise ValueError("exploration_const must be >= 0")
        if self.theta_snapshot_every < 0:
            raise ValueError("theta_snapshot_every must be >= 0")
        if self.root_candidates is not None and len(self.root_candidates) == 0:
            raise ValueError("root_candidates, when given, must be nonempty")
        if self.anchor_mode not in _ANCHOR_MODES:
            raise ValueError(f"anchor_mode must be one of {_ANCHOR_MODES}")


class SearchNode:
    """One tree node: bounded candidate set with visit/value stats and its own theta."""

    __slots__ = ("space", "depth", "params", "candidates", "cand_set",
                 "visits", "q", "children", "expanded", "_off", "_lin")

    def __init__(self, space: JointActionSpace, params: SurrogateParams, depth: int):
        self.space = space
        self.depth = depth
        self.params = params
        self.candidates: list[JointAction] = []
        self.cand_set: set[JointAction] = set()
        self.visits: list[int] = []
        self.q: list[float] = []
        self.children: dict[int, SearchNode] = {}
        self.expanded = False
        self._off: np.ndarray | None = None
        self._lin: np.ndarray | None = None

    def add_candidate(self, a: JointAction) -> bool:
        if a in self.cand_set:
            return False
        self.space.validate(a)
        self.candidates.append(a)
        self.cand_set.add(a)
        self.visits.append(0)
        self.q.append(0.0)
        self._off = None
        self._lin = None
        return True

    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        if self._off is None:
            rows = np.asarray(self.candidates, dtype=np.int64)
            self._off = rows + np.arange(self.space.n, dtype=np.int64) * self.space.d
            weights = float(self.space.d) ** np.arange(
                self.space.n - 1, -1, -1, dtype=np.float64
            )
            self._lin = rows.astype(np.float64) @ weights
        return self._off, self._lin

    def z_scores(self) -> np.ndarray:
        off, _ = self._tables()
        return self.params.theta[off].sum(axis=1)

    def argmax_eta(self) -> int:
        """Candidate position with maximal eta, ties to the smallest linear index."""
        _, lin = self._tables()
        return int(np.lexsort((lin, -self.z_scores()))[0])


class CandidateSearch:
    """Driver object; run_search() below is the one-call wrapper."""

    def __init__(self, env: "PayoffTensor | EpisodicMatGame", cfg: PlannerConfig,
                 rng: "np.random.Generator | int | None"):
        if isinstance(env, EpisodicMatGame):
            self.tensor = env.tensor
            self.horizon = env.horizon
            self.discount = env.discount
        else:
            self.tensor = env
            self.horizon = 1
            self.discount = cfg.discount
        self.space = self.tensor.space
        self.cfg = cfg
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.trace = SearchTrace(
            planner="nonzero", budget=cfg.n_sim, env_config=self.tensor.to_config()
        )
        self.sim = 0
        self.root = SearchNode(self.space, self._fresh_params(), depth=0)
        self.expand_node(self.root, parent_best=None)

    # -- reward bookkeeping ------------------------------------------------

    def _reward_env(self, a: JointAction) -> float:
        self.trace.env_reward_queries += 1
        return self.tensor.reward(a, rng=self.rng)

    def _reward_model(self, a: JointAction) -> float:
        self.trace.model_reward_queries += 1
        return self.tensor.reward(a)

    def _fresh_params(self) -> SurrogateParams:
        return SurrogateParams.zeros(
            self.space, c=self.cfg.link_c, alpha=self.cfg.link_alpha, link=self.cfg.link
        )

    # -- the three phases ----------------------------------------------------

    def expand_node(self, node: SearchNode, parent_best: JointAction | None) -> None:
        """Fill a fresh node's candidate set and log expansion diagnostics."""
        if node.expanded:
            raise ValueError("node already expanded")
        if node is self.root and self.cfg.root_candidates is not None:
            for a in self.cfg.root_candidates:
                node.add_candidate(tuple(int(x) for x in a))
        else:
            want = min(self.cfg.init_candidates, self.cfg.proposal.candidate_cap,
                       self.space.size)
            if parent_best is not None:
                node.add_candidate(parent_best)
            guard = 0
            while len(node.candidates) < want:
                node.add_candidate(self.space.random_action(self.rng))
                guard += 1
                if guard > 200 * want + 200:  # duplicate draws on tiny spaces
                    break
        node.expanded = True
        for cand in list(node.candidates):
            self._log_expansion(node, cand)

    def _log_expansion(self, node: SearchNode, cand: JointAction) -> None:
        p, space = node.params, self.space
        if space.n >= 2:
            u, v = sample_direction_pair(space, cand, self.rng)
        else:
            j = int(self.rng.integers(0, space.d - 1))
            j += j >= cand[0]
            u, v = Direction(0, j), None
        e_base = eta(p, space, cand)
        e_u = eta(p, space, apply_direction(cand, u, space))
        first_gain = e_u - e_base
        if v is None:
            full_gain = mixed = None
        else:
            e_v = eta(p, space, apply_direction(cand, v, space))
            e_uv = eta(p, space, apply_pair(cand, u, v, space))
            full_gain = e_uv - e_base
            mixed = e_uv - e_u - e_v + e_base
        self.trace.expansions.append(
            ExpansionRecord(
                t=self.sim, depth=node.depth, candidate=cand, u=u, v=v,
                first_gain=first_gain, pair_full_gain=full_gain, pair_mixed=mixed,
            )
        )

    def select_path(self) -> list[tuple[SearchNode, int]]:
        """Descend by argmax-eta through expanded nodes; stop before terminal depth."""
        path: list[tuple[SearchNode, int]] = []
        node = self.root
        depth = 0
        while True:
            pos = self._select_pos(node)
            path.append((node, pos))
            depth += 1
            if depth >= self.horizon:
                return path
            child = node.children.get(pos)
            if child is None:
                params = node.params if self.cfg.warm_start == "parent_copy" else self._fresh_params()
                child = SearchNode(self.space, params, depth)
                node.children[pos] = child
            if not child.expanded:
                self.expand_node(child, parent_best=node.candidates[pos])
                return path
            node = child

    def _select_pos(self, node: SearchNode) -> int:
        if self.cfg.selection_mode == "eta":
            return node.argmax_eta()
        z = node.z_scores()
        key = np.asarray(link_value(node.params, z), dtype=np.float64)
        n_arr = np.asarray(node.visits, dtype=np.float64)
        key = key + self.cfg.exploration_const * np.sqrt(n_arr.sum() + 1.0) / (1.0 + n_arr)
        _, lin = node._tables()
        return int(np.lexsort((lin, -key))[0])

    def backup_path(self, path: list[tuple[SearchNode, int]], rewards: list[float]) -> float:
        """Stats update, surrogate learning, and proposals along the path.

        Returns the root node's composite error xi for the trace.
        """
        returns = [0.0] * len(rewards)
        acc = 0.0
        for i in range(len(rewards) - 1, -1, -1):
            acc = rewards[i] + self.discount * acc
            returns[i] = acc
        xi_root = 0.0
        for (node, pos), g in zip(reversed(path), reversed(returns)):
            node.visits[pos] += 1
            node.q[pos] += (g - node.q[pos]) / node.visits[pos]
            # Supervision anchor: the action selected at this node (default),
            # or a uniformly picked candidate.  Selected anchoring
            # concentrates the fit around the current best, which is what
            # keeps a singles-only searcher pinned inside a coordination
            # trap; uniform rotation spreads supervision over the whole
            # candidate set at the cost of feeding every candidate's
            # neighborhood back into the shared additive score.
            if self.cfg.anchor_mode == "selected":
                a = node.candidates[pos]
            else:
                a = node.candidates[int(self.rng.integers(0, len(node.candidates)))]
            if self.space.n >= 2:
                u, v = sample_direction_pair(self.space, a, self.rng)
            else:
                j = int(self.rng.integers(0, self.space.d - 1))
                j += j >= a[0]
                u, v = Direction(0, j), None
            sample = supervision_from_reward(self._reward_model, self.space, a, u, v)
            xi = composite_error(node.params, self.space, sample)
            for _ in range(self.cfg.grad_steps_per_backup):
                node.params = sgd_step(
                    node.params, self.space, [sample], self.cfg.learning_rate
                )
            for cand in propose(
                node.params, self.space, node.candidates, self.cfg.proposal, self.rng
            ):
                node.add_candidate(cand)
            if node is self.root:
                xi_root = xi
        return xi_root

    def run(self) -> tuple[dict[JointAction, float], SearchTrace]:
        cfg = self.cfg
        for t in range(1, cfg.n_sim + 1):
            self.sim = t
            path = self.select_path()
            rewards = [self._reward_env(node.candidates[pos]) for node, pos in path]
            xi = self.backup_path(path, rewards)
            root_pos = path[0][1]
            inc_pos = self.root.argmax_eta()
            inc = self.root.candidates[inc_pos]
            self.trace.steps.append(
                TraceStep(
                    t=t,
                    action=self.root.candidates[root_pos],
                    reward=rewards[0],
                    xi=xi,
                    incumbent=inc,
                    incumbent_value=self.tensor.reward(inc),  # diagnostic, uncounted
                    q_incumbent=self.root.q[inc_pos],
                )
            )
            if cfg.theta_snapshot_every and t % cfg.theta_snapshot_every == 0:
                self.trace.theta_snapshots.append(
                    (t, [float(x) for x in self.root.params.theta])
                )
        total = sum(self.root.visits)
        policy = {
            a: self.root.visits[i] / total for i, a in enumerate(self.root.candidates)
        }
        return policy, self.trace


def run_search(
    env: "PayoffTensor | EpisodicMatGame",
    cfg: PlannerConfig,
    rng: "np.random.Generator | int | None" = None,
) -> tuple[dict[JointAction, float], SearchTrace]:
    """Run the candidate-set search for cfg.n_sim simulations.

    Returns (normalized root visit counts, trace).  Visit counts over root
    candidates always sum to n_sim: every simulation credits exactly one
    root candidate.
    """
    search = CandidateSearch(env, cfg, rng)
    return search.run()


def recommend(policy: dict[JointAction, float], space: JointActionSpace) -> JointAction:
    """Most-visited action from a run_search policy, ties to smallest linear index."""
    if not policy:
        raise InvalidActionError("empty policy")
    return min(policy, key=lambda a: (-policy[a], space.linear_index(a)))
