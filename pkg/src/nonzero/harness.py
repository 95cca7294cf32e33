"""Experiment harness: INI configs in, JSONL traces and CSV/JSON summaries out.

Config grammar (stdlib configparser, flat key = value per section)::

    [experiment]
    name = smoke          # experiment name, used in paths and CSV rows
    budget = 200          # simulations (planner) or pulls (baselines) per run
    seeds = 0,1,2         # comma list and/or inclusive ranges like 0..19
    epsilon = 0.5         # optional: enables oracle local-set metrics
    epsilon2 = 0.5        # optional pair threshold, defaults to epsilon
    out = results         # output root; NONZERO_OUT env var or --out override

    [env]                 # exactly one for `run`; [env.<label>] repeated for `matrix`
    kind = nonlinear      # linear | nonlinear | trap
    n = 2
    d = 3                 # trap: n must be 2 and d >= 4 is the board size
    seed = 7              # tensor seed (structure), independent of run seeds
    block_corner = 1      # trap only, optional; defaults to the far corner d-2
    horizon = 1           # optional; >1 wraps the tensor in an episodic game
    discount = 0.99       # optional, used when horizon > 1

    [planner.<label>]     # one section per planner, label names the output dir
    type = nonzero        # nonzero | flat_ucb | sampled_puct | full_puct
    # nonzero keys: candidate_cap, k_single, k_pair, pair_sample_budget,
    #   init_candidates, learning_rate, grad_steps, link, link_c, link_alpha,
    #   selection (eta|eta_visit), anchor (selected|uniform), exploration,
    #   warm_start, root (e.g. "0 0; 1 2")
    # flat_ucb / full_puct keys: exploration
    # sampled_puct keys: sample_count, exploration

Output layout: <out>/<exp>/(<env-label>/)<planner>/<seed>/trace.jsonl plus
<out>/<exp>/summary.csv (schema-tagged header, one row per
(exp, planner, seed, metric)) and summary.json (aggregates; the only file
carrying a timestamp).  Fixed config and seeds give byte-identical traces
and CSV; parallel and serial execution write identical files.
"""

from __future__ import annotations

import configparser
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import JointAction
from .baselines import run_flat_ucb, run_full_puct, run_sampled_puct
from .errors import ConfigError, EnumerationCapError
from .matgame import (
    EpisodicMatGame,
    PayoffTensor,
    make_coordination_trap,
    make_linear,
    make_nonlinear,
)
from .metrics import (
    hitting_time,
    indicator_regret,
    gap_regret,
    loglog_slope,
    separation_ratio,
)
from .oracle import local_maximizer_set
from .planner import PlannerConfig, recommend, run_search
from .proposal import ProposalConfig
from .trace import SearchTrace

CSV_SCHEMA = "nonzero-summary-v1"
JSON_SCHEMA = "nonzero-json-summary-v1"


# ---------------------------------------------------------------------------
# config model


@dataclass(frozen=True)
class EnvSpec:
    label: str
    kind: str
    n: int
    d: int
    seed: int = 0
    horizon: int = 1
    discount: float = 0.99
    block_corner: int | None = None

    def build(self):
        if self.kind == "linear":
            tensor = make_linear(self.n, self.d, self.seed)
        elif self.kind == "nonlinear":
            tensor = make_nonlinear(self.n, self.d, self.seed)
        elif self.kind == "trap":
            tensor = make_coordination_trap(
                board_size=self.d, block_corner=self.block_corner
            ).tensor
        else:
            raise ConfigError(f"unknown env kind {self.kind!r}")
        if self.horizon > 1:
            return EpisodicMatGame(tensor, horizon=self.horizon, discount=self.discount)
        return tensor


@dataclass(frozen=True)
class PlannerSpec:
    label: str
    type: str
    options: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    name: str
    budget: int
    seeds: list[int]
    out: Path
    envs: list[EnvSpec]
    planners: list[PlannerSpec]
    epsilon: float | None = None
    epsilon2: float | None = None
    parallel: int = 1


def parse_seeds(text: str) -> list[int]:
    """Comma list with inclusive a..b ranges: "0,2,5..8" -> [0,2,5,6,7,8]."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"bad seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("duplicate seeds")
    return seeds


def _parse_root(text: str) -> tuple[JointAction, ...]:
    actions = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        actions.append(tuple(int(x) for x in chunk.replace(",", " ").split()))
    if not actions:
        raise ConfigError("empty root candidate list")
    return tuple(actions)


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    try:
        name = exp.get("name", path.stem)
        budget = exp.getint("budget")
        seeds = parse_seeds(exp.get("seeds", "0"))
        out = Path(exp.get("out", os.environ.get("NONZERO_OUT", "results")))
        epsilon = exp.getfloat("epsilon") if "epsilon" in exp else None
        epsilon2 = exp.getfloat("epsilon2") if "epsilon2" in exp else None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad [experiment] values: {exc}") from exc
    if budget is None or budget < 1:
        raise ConfigError("budget must be a positive int")
    if epsilon is None and epsilon2 is not None:
        raise ConfigError("epsilon2 without epsilon")

    envs: list[EnvSpec] = []
    planners: list[PlannerSpec] = []
    for section in parser.sections():
        if section == "experiment":
            continue
        if section == "env" or section.startswith("env."):
            label = "env" if section == "env" else section.split(".", 1)[1]
            sec = parser[section]
            try:
                envs.append(
                    EnvSpec(
                        label=label,
                        kind=sec.get("kind", "linear"),
                        n=sec.getint("n", 2),
                        d=sec.getint("d", 2),
                        seed=sec.getint("seed", 0),
                        horizon=sec.getint("horizon", 1),
                        discount=sec.getfloat("discount", 0.99),
                        block_corner=(
                            sec.getint("block_corner")
                            if "block_corner" in sec
                            else None
                        ),
                    )
                )
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad [{section}] values: {exc}") from exc
            if envs[-1].kind not in ("linear", "nonlinear", "trap"):
                raise ConfigError(f"unknown env kind {envs[-1].kind!r} in [{section}]")
            if envs[-1].kind == "trap" and (envs[-1].n != 2 or envs[-1].d < 4):
                raise ConfigError("trap env needs n=2 and d >= 4")
            if envs[-1].kind != "trap" and envs[-1].block_corner is not None:
                raise ConfigError("block_corner only applies to trap envs")
        elif section.startswith("planner."):
            label = section.split(".", 1)[1]
            sec = parser[section]
            ptype = sec.get("type")
            if ptype not in ("nonzero", "flat_ucb", "sampled_puct", "full_puct"):
                raise ConfigError(f"unknown planner type {ptype!r} in [{section}]")
            options = {k: v for k, v in sec.items() if k != "type"}
            planners.append(PlannerSpec(label=label, type=ptype, options=options))
        else:
            raise ConfigError(f"unexpected section [{section}]")
    if not envs:
        raise ConfigError("no [env] section")
    if len({e.label for e in envs}) != len(envs):
        raise ConfigError("duplicate env labels")
    if not planners:
        raise ConfigError("no [planner.*] sections")
    if len({p.label for p in planners}) != len(planners):
        raise ConfigError("duplicate planner labels")
    return ExperimentConfig(
        name=name, budget=budget, seeds=seeds, out=out, envs=envs,
        planners=planners, epsilon=epsilon, epsilon2=epsilon2,
    )


def build_planner_config(spec: PlannerSpec, budget: int) -> PlannerConfig:
    opt = dict(spec.options)

    def geti(key, default):
        return int(opt[key]) if key in opt else default

    def getf(key, default):
        return float(opt[key]) if key in opt else default

    try:
        proposal = ProposalConfig(
            k_single=geti("k_single", 2),
            k_pair=geti("k_pair", 2),
            pair_sample_budget=geti("pair_sample_budget", 4096),
            candidate_cap=geti("candidate_cap", 16),
        )
        return PlannerConfig(
            n_sim=budget,
            proposal=proposal,
            learning_rate=getf("learning_rate", 0.05),
            grad_steps_per_backup=geti("grad_steps", 1),
            discount=getf("discount", 1.0),
            selection_mode=opt.get("selection", "eta"),
            anchor_mode=opt.get("anchor", "selected"),
            exploration_const=getf("exploration", 1.0),
            warm_start=opt.get("warm_start", "parent_copy"),
            init_candidates=geti("init_candidates", 3),
            root_candidates=_parse_root(opt["root"]) if "root" in opt else None,
            link=opt.get("link", "asinh"),
            link_c=getf("link_c", 1.0),
            link_alpha=getf("link_alpha", 1.0),
            theta_snapshot_every=geti("theta_snapshot_every", 0),
        )
    except ValueError as exc:
        raise ConfigError(f"bad planner options for [{spec.label}]: {exc}") from exc


# ---------------------------------------------------------------------------
# single runs


def run_planner_once(
    env, spec: PlannerSpec, budget: int, seed: int
) -> tuple[SearchTrace, JointAction]:
    """One (planner, seed) run; returns the trace and the recommended action."""
    rng = np.random.default_rng(seed)
    if spec.type == "nonzero":
        cfg = build_planner_config(spec, budget)
        policy, trace = run_search(env, cfg, rng)
        rec = recommend(policy, env.space)
    else:
        opt = spec.options
        c = float(opt.get("exploration", np.sqrt(2.0)))
        if spec.type == "flat_ucb":
            trace = run_flat_ucb(env, budget, exploration_const=c, rng=rng)
        elif spec.type == "sampled_puct":
            trace = run_sampled_puct(
                env, budget, sample_count=int(opt.get("sample_count", 3)),
                exploration_const=c, rng=rng,
            )
        else:
            trace = run_full_puct(env, budget, exploration_const=c, rng=rng)
        rec = trace.steps[-1].incumbent
    trace.seed = seed
    return trace, rec


def _job(payload: dict) -> dict:
    """Worker entry: build env, run, write the trace, return metric rows."""
    env_spec = EnvSpec(**payload["env"])
    planner_spec = PlannerSpec(**payload["planner"])
    env = env_spec.build()
    tensor = env.tensor if isinstance(env, EpisodicMatGame) else env
    trace, rec = run_planner_once(env, planner_spec, payload["budget"], payload["seed"])
    trace_path = Path(payload["trace_path"])
    trace.write_jsonl(trace_path)

    local_set = payload["local_set"]
    exp = payload["exp"]
    rows = []

    def add(metric: str, value: float) -> None:
        rows.append(
            {"exp": exp, "planner": planner_spec.label, "seed": payload["seed"],
             "metric": metric, "value": float(value)}
        )

    add("final_return", tensor.reward(rec))
    add("best_seen", float(np.max(trace.rewards())))
    add("env_reward_queries", trace.env_reward_queries)
    add("model_reward_queries", trace.model_reward_queries)
    if local_set is not None:
        members = [tuple(a) for a in local_set]
        hit = hitting_time(trace, members)
        add("hit_time", payload["budget"] + 1 if hit is None else hit)
        add("hit_censored", 0.0 if hit is not None else 1.0)
        ind = indicator_regret(trace, members)
        add("indicator_regret_final", ind[-1])
        gap = gap_regret(trace, tensor.reward, members)
        add("gap_regret_final", gap[-1])
        t_max = len(ind)
        t_min = max(1, t_max // 100)
        if t_max >= 10 * t_min and ind[t_min - 1] > 0:
            add("indicator_slope", loglog_slope(ind, t_min, t_max))
    return {"rows": rows, "actions_hit": None}


# ---------------------------------------------------------------------------
# experiment drivers


def _local_set_for(cfg: ExperimentConfig, env_spec: EnvSpec):
    """Oracle local set, or None when epsilon is unset.  Cap violations raise."""
    if cfg.epsilon is None:
        return None
    tensor_env = env_spec.build()
    tensor = tensor_env.tensor if isinstance(tensor_env, EpisodicMatGame) else tensor_env
    eps1 = cfg.epsilon
    eps2 = cfg.epsilon2 if cfg.epsilon2 is not None else cfg.epsilon
    try:
        return local_maximizer_set(tensor, eps1, eps2)
    except EnumerationCapError as exc:
        raise EnumerationCapError(
            f"local-set metrics (hit_time/indicator regret) for env '{env_spec.label}' "
            f"need enumeration of {exc.size} entries > cap {exc.cap}",
            size=exc.size, cap=exc.cap,
        ) from exc


def _exp_label(cfg: ExperimentConfig, env_spec: EnvSpec) -> str:
    return cfg.name if len(cfg.envs) == 1 else f"{cfg.name}.{env_spec.label}"


def _trace_path(cfg: ExperimentConfig, env_spec: EnvSpec, planner: str, seed: int) -> Path:
    base = cfg.out / cfg.name
    if len(cfg.envs) > 1:
        base = base / env_spec.label
    return base / planner / str(seed) / "trace.jsonl"


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Execute all (env, planner, seed) runs and write traces + summaries.

    Returns the experiment output directory.
    """
    out_dir = cfg.out / cfg.name
    if out_dir.exists():
        print(f"warning: output dir {out_dir} exists, files will be overwritten",
              file=sys.stderr)
    jobs = []
    local_sets = {}
    for env_spec in cfg.envs:
        local = _local_set_for(cfg, env_spec)
        local_sets[env_spec.label] = local
        for planner in cfg.planners:
            for seed in cfg.seeds:
                jobs.append(
                    {
                        "env": env_spec.__dict__,
                        "planner": {"label": planner.label, "type": planner.type,
                                    "options": planner.options},
                        "budget": cfg.budget,
                        "seed": seed,
                        "exp": _exp_label(cfg, env_spec),
                        "trace_path": str(_trace_path(cfg, env_spec, planner.label, seed)),
                        "local_set": local,
                    }
                )
    if cfg.parallel > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    rows = [row for res in results for row in res["rows"]]
    rows.extend(_separation_rows(cfg, local_sets))
    rows.sort(key=lambda r: (r["exp"], r["planner"], r["seed"], r["metric"]))
    _write_csv(out_dir / "summary.csv", rows)
    _write_json_summary(out_dir / "summary.json", cfg, rows)
    return out_dir


def _separation_rows(cfg: ExperimentConfig, local_sets: dict) -> list[dict]:
    """Per-seed hitting-time ratios of every baseline against every nonzero planner."""
    if cfg.epsilon is None:
        return []
    guided = [p for p in cfg.planners if p.type == "nonzero"]
    baselines = [p for p in cfg.planners if p.type != "nonzero"]
    rows = []
    for env_spec in cfg.envs:
        local = local_sets[env_spec.label]
        if local is None:
            continue
        members = [tuple(a) for a in local]
        exp = _exp_label(cfg, env_spec)
        for g in guided:
            for b in baselines:
                for seed in cfg.seeds:
                    tr_g = SearchTrace.read_jsonl(_trace_path(cfg, env_spec, g.label, seed))
                    tr_b = SearchTrace.read_jsonl(_trace_path(cfg, env_spec, b.label, seed))
                    res = separation_ratio(tr_b, tr_g, members, budget=cfg.budget)
                    rows.append(
                        {"exp": exp, "planner": g.label, "seed": seed,
                         "metric": f"sep_ratio_vs_{b.label}", "value": float(res.ratio)}
                    )
    return rows


def run_matrix(cfg: ExperimentConfig) -> Path:
    """Cross-product sweep; besides run_experiment's outputs, writes a
    mean +/- std comparison table over (env, planner) cells."""
    if len(cfg.planners) < 2:
        raise ConfigError("matrix needs at least two [planner.*] sections")
    out_dir = run_experiment(cfg)
    table = _comparison_table(cfg, out_dir)
    (out_dir / "comparison.txt").write_text(table)
    print(table)
    return out_dir


def _cell_stats(rows, exp, planner, metric):
    vals = [r["value"] for r in rows
            if r["exp"] == exp and r["planner"] == planner and r["metric"] == metric]
    if not vals:
        return None
    arr = np.asarray(vals)
    return float(arr.mean()), float(arr.std())


def _comparison_table(cfg: ExperimentConfig, out_dir: Path) -> str:
    rows = _read_csv(out_dir / "summary.csv")
    lines = []
    metrics = ["final_return"] + (["hit_time"] if cfg.epsilon is not None else [])
    for metric in metrics:
        lines.append(f"== {metric} (mean +/- std over {len(cfg.seeds)} seeds) ==")
        header = ["env".ljust(16)] + [p.label.rjust(20) for p in cfg.planners]
        lines.append("".join(header))
        for env_spec in cfg.envs:
            exp = _exp_label(cfg, env_spec)
            cells = [env_spec.label.ljust(16)]
            for p in cfg.planners:
                stat = _cell_stats(rows, exp, p.label, metric)
                cells.append(
                    "--".rjust(20) if stat is None
                    else f"{stat[0]:.3f} +/- {stat[1]:.3f}".rjust(20)
                )
            lines.append("".join(cells))
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# file emission


def _write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={CSV_SCHEMA}\n")
        writer = csv.DictWriter(fh, fieldnames=["exp", "planner", "seed", "metric", "value"])
        writer.writeheader()
        for row in rows:
            out = dict(row)
            out["value"] = repr(float(row["value"]))
            writer.writerow(out)


def _read_csv(path: Path) -> list[dict]:
    rows = []
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# schema="):
            raise ConfigError(f"{path}: missing schema line")
        for row in csv.DictReader(fh):
            row["seed"] = int(row["seed"])
            row["value"] = float(row["value"])
            rows.append(row)
    return rows


def _quartiles(vals: list[float]) -> dict:
    arr = np.asarray(vals, dtype=np.float64)
    return {
        "median": float(np.median(arr)),
        "q25": float(np.quantile(arr, 0.25)),
        "q75": float(np.quantile(arr, 0.75)),
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "n": int(arr.size),
    }


def _write_json_summary(path: Path, cfg: ExperimentConfig, rows: list[dict]) -> None:
    per: dict = {}
    for row in rows:
        per.setdefault(row["exp"], {}).setdefault(row["planner"], {}).setdefault(
            row["metric"], []
        ).append(row["value"])
    aggregates = {
        exp: {
            planner: {metric: _quartiles(vals) for metric, vals in metrics.items()}
            for planner, metrics in planners.items()
        }
        for exp, planners in per.items()
    }
    doc = {
        "schema": JSON_SCHEMA,
        "experiment": cfg.name,
        "budget": cfg.budget,
        "seeds": cfg.seeds,
        "epsilon": cfg.epsilon,
        "epsilon2": cfg.epsilon2 if cfg.epsilon2 is not None else cfg.epsilon,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "aggregates": aggregates,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
