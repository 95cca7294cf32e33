"""Run traces shared by the candidate-set planner and the bandit baselines.

A trace serializes to JSON lines: one header record first (schema tag,
planner, seed, env config, budget, query counters), then one record per
iteration.  Optional theta-snapshot and expansion-diagnostic records carry a
"kind" tag of their own.  Serialization is canonical (sorted keys, repr
floats), so identical runs produce byte-identical files.

Two query counters are kept separate: env_reward_queries counts rewards of
actions the run actually executed/selected; model_reward_queries counts
counterfactual neighborhood queries used to build supervision targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import Direction, JointAction

SCHEMA = "nonzero-trace-v1"


@dataclass
class TraceStep:
    t: int
    action: JointAction
    reward: float
    xi: float | None = None
    incumbent: JointAction | None = None
    incumbent_value: float | None = None
    q_incumbent: float | None = None

    def to_record(self) -> dict:
        rec = {
            "kind": "step",
            "iter": self.t,
            "selected_action": list(self.action),
            "reward": self.reward,
            "xi": self.xi,
            "incumbent": None if self.incumbent is None else list(self.incumbent),
            "incumbent_value": self.incumbent_value,
        }
        if self.q_incumbent is not None:
            rec["q_incumbent"] = self.q_incumbent
        return rec

    @staticmethod
    def from_record(rec: dict) -> "TraceStep":
        return TraceStep(
            t=rec["iter"],
            action=tuple(rec["selected_action"]),
            reward=rec["reward"],
            xi=rec.get("xi"),
            incumbent=None if rec.get("incumbent") is None else tuple(rec["incumbent"]),
            incumbent_value=rec.get("incumbent_value"),
            q_incumbent=rec.get("q_incumbent"),
        )


@dataclass
class ExpansionRecord:
    """Expand-time diagnostics for one freshly added candidate."""

    t: int
    depth: int
    candidate: JointAction
    u: Direction | None
    v: Direction | None
    first_gain: float | None
    pair_full_gain: float | None  # eta(cand^(u,v)) - eta(cand)
    pair_mixed: float | None      # mixed second difference at cand

    def to_record(self) -> dict:
        return {
            "kind": "expansion",
            "iter": self.t,
            "depth": self.depth,
            "candidate": list(self.candidate),
            "u": None if self.u is None else [self.u.agent, self.u.target],
            "v": None if self.v is None else [self.v.agent, self.v.target],
            "first_gain": self.first_gain,
            "pair_full_gain": self.pair_full_gain,
            "pair_mixed": self.pair_mixed,
        }


@dataclass
class SearchTrace:
    planner: str
    budget: int
    seed: int | None = None
    env_config: dict = field(default_factory=dict)
    steps: list[TraceStep] = field(default_factory=list)
    expansions: list[ExpansionRecord] = field(default_factory=list)
    theta_snapshots: list[tuple[int, list[float]]] = field(default_factory=list)
    env_reward_queries: int = 0
    model_reward_queries: int = 0

    def actions(self) -> list[JointAction]:
        return [s.action for s in self.steps]

    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps], dtype=np.float64)

    def incumbents(self) -> list[JointAction | None]:
        return [s.incumbent for s in self.steps]

    def header(self) -> dict:
        return {
            "kind": "header",
            "schema": SCHEMA,
            "planner": self.planner,
            "budget": self.budget,
            "seed": self.seed,
            "env": self.env_config,
            "env_reward_queries": self.env_reward_queries,
            "model_reward_queries": self.model_reward_queries,
        }

    def write_jsonl(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(_dumps(self.header()) + "\n")
            for s in self.steps:
                fh.write(_dumps(s.to_record()) + "\n")
            for e in self.expansions:
                fh.write(_dumps(e.to_record()) + "\n")
            for t, theta in self.theta_snapshots:
                fh.write(_dumps({"kind": "theta", "iter": t, "theta": theta}) + "\n")

    @staticmethod
    def read_jsonl(path: str | Path) -> "SearchTrace":
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or lines[0].get("kind") != "header":
            raise ValueError(f"{path}: missing trace header record")
        head = lines[0]
        if head.get("schema") != SCHEMA:
            raise ValueError(f"{path}: unknown trace schema {head.get('schema')!r}")
        trace = SearchTrace(
            planner=head["planner"],
            budget=head["budget"],
            seed=head.get("seed"),
            env_config=head.get("env", {}),
            env_reward_queries=head.get("env_reward_queries", 0),
            model_reward_queries=head.get("model_reward_queries", 0),
        )
        for rec in lines[1:]:
            kind = rec.get("kind", "step")
            if kind == "step":
                trace.steps.append(TraceStep.from_record(rec))
            elif kind == "theta":
                trace.theta_snapshots.append((rec["iter"], rec["theta"]))
            # expansion records are diagnostic-only; skipped on read
        return trace


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
