"""Command line interface.

Subcommands:
  run     execute one experiment config (single [env] section)
  matrix  execute a cross-product sweep ([env.*] x [planner.*]) with a
          comparison table
  oracle  exhaustive landscape reports: global argmax, local-maximizer sets,
          smoothness constants
  verify  integrity checks on a written trace file

Exit codes: 0 success, 2 config problems, 3 enumeration over the dense cap,
4 numeric failure (diverged surrogate), 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, EnumerationCapError, NumericFailureError
from .harness import parse_config, parse_seeds, run_experiment, run_matrix
from .matgame import PayoffTensor, make_coordination_trap, make_linear, make_nonlinear
from .oracle import (
    estimate_smoothness,
    global_argmax,
    local_maximizer_set,
    local_optimality_report,
)
from .trace import SCHEMA, SearchTrace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_NUMERIC = 4


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="INI experiment config")
    sub.add_argument("--out", help="override output root directory")
    sub.add_argument("--seeds", help="override seed list, e.g. 0,1,2 or 0..19")
    sub.add_argument("--budget", type=int, help="override per-run budget")
    sub.add_argument("--parallel", type=int, default=1,
                     help="worker processes (default 1 = serial)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonzero",
        description="candidate-set tree search over joint-action payoff tensors",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="run one experiment config")
    _add_run_flags(run_p)

    mat_p = subs.add_parser("matrix", help="run an env x planner sweep")
    _add_run_flags(mat_p)

    orc_p = subs.add_parser("oracle", help="exhaustive landscape report")
    orc_p.add_argument("--kind", choices=["linear", "nonlinear", "trap"], default="linear")
    orc_p.add_argument("--n", type=int, default=2, help="number of agents")
    orc_p.add_argument("--d", type=int, default=2, help="actions per agent")
    orc_p.add_argument("--env-seed", type=int, default=0)
    orc_p.add_argument("--eps1", type=float, default=0.0, help="single-move slack")
    orc_p.add_argument("--eps2", type=float, help="pair-move slack (default eps1)")
    orc_p.add_argument("--action", help="report one action, e.g. '1,2' (else whole set)")
    orc_p.add_argument("--smoothness", action="store_true",
                       help="include curvature constants")
    orc_p.add_argument("--out", help="write JSON here instead of stdout")

    ver_p = subs.add_parser("verify", help="check a trace file")
    ver_p.add_argument("--trace", required=True, help="path to trace.jsonl")
    return parser


def _apply_overrides(cfg, args) -> None:
    if args.out:
        cfg.out = Path(args.out)
    if args.seeds:
        cfg.seeds = parse_seeds(args.seeds)
    if args.budget is not None:
        if args.budget < 1:
            raise ConfigError("--budget must be positive")
        cfg.budget = args.budget
    cfg.parallel = max(1, args.parallel)


def _cmd_run(args, matrix: bool) -> int:
    cfg = parse_config(args.config)
    _apply_overrides(cfg, args)
    if matrix:
        out = run_matrix(cfg)
    else:
        if len(cfg.envs) > 1:
            raise ConfigError("run expects a single [env] section; use matrix")
        out = run_experiment(cfg)
    print(f"wrote {out}/summary.csv")
    return EXIT_OK


def _build_env(args) -> PayoffTensor:
    if args.kind == "trap":
        if args.n != 2 or args.d < 4:
            raise ConfigError("trap env needs --n 2 and --d >= 4")
        return make_coordination_trap(board_size=args.d).tensor
    maker = make_linear if args.kind == "linear" else make_nonlinear
    return maker(args.n, args.d, args.env_seed)


def _cmd_oracle(args) -> int:
    tensor = _build_env(args)
    eps2 = args.eps2 if args.eps2 is not None else args.eps1
    doc: dict = {
        "kind": args.kind,
        "n": tensor.space.n,
        "d": tensor.space.d,
        "eps1": args.eps1,
        "eps2": eps2,
    }
    if args.action:
        a = tuple(int(x) for x in args.action.replace(",", " ").split())
        doc["report"] = local_optimality_report(tensor, a, args.eps1, eps2).to_dict()
    else:
        best_a, best_v = global_argmax(tensor)
        members = local_maximizer_set(tensor, args.eps1, eps2)
        doc["global_argmax"] = {"action": list(best_a), "value": best_v}
        doc["local_set_size"] = len(members)
        doc["local_set"] = [list(a) for a in members[:1000]]
    if args.smoothness:
        doc["smoothness"] = estimate_smoothness(tensor).to_dict()
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_verify(args) -> int:
    """Re-derive what a trace claims: schema, step continuity, reward
    consistency against a rebuilt environment, finite loss signals."""
    path = Path(args.trace)
    failures: list[str] = []

    def check(ok: bool, label: str) -> None:
        print(f"{'ok  ' if ok else 'FAIL'} {label}")
        if not ok:
            failures.append(label)

    try:
        trace = SearchTrace.read_jsonl(path)
    except (OSError, ValueError, KeyError) as exc:
        print(f"FAIL unreadable trace: {exc}")
        return 1
    check(True, f"header schema {SCHEMA}")
    iters = [s.t for s in trace.steps]
    check(iters == list(range(1, len(iters) + 1)), "iterations contiguous from 1")
    check(len(trace.steps) == trace.budget,
          f"step count {len(trace.steps)} == budget {trace.budget}")
    xs = np.array([s.xi for s in trace.steps if s.xi is not None], dtype=np.float64)
    check(bool(np.all(np.isfinite(xs)) and np.all(xs >= 0.0)),
          "loss signal finite and nonnegative")
    rewards = trace.rewards()
    check(bool(np.all(np.isfinite(rewards))), "rewards finite")
    if trace.env_config:
        try:
            tensor = PayoffTensor.from_config(trace.env_config)
        except (KeyError, ValueError) as exc:
            check(False, f"env reconstructable ({exc})")
        else:
            check(True, "env reconstructable")
            recomputed = np.array(
                [tensor.reward(a) for a in trace.actions()], dtype=np.float64
            )
            check(bool(np.allclose(recomputed, rewards, rtol=0.0, atol=0.0)),
                  "step rewards match re-queried environment exactly")
            incs = [s.incumbent for s in trace.steps if s.incumbent is not None]
            check(all(tensor.space.contains(a) for a in incs),
                  "incumbents inside the joint-action space")
    if failures:
        print(f"{len(failures)} check(s) failed")
        return 1
    print("all checks passed")
    return EXIT_OK


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, matrix=False)
        if args.command == "matrix":
            return _cmd_run(args, matrix=True)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "verify":
            return _cmd_verify(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnumerationCapError as exc:
        print(f"enumeration cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
