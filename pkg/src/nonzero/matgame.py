"""Deterministic matrix-game payoff tensors (single-state cooperative bandits).

Two generated families over a JointActionSpace:

* linear:    R(a) = sum_i a_i  (global max n*(d-1) at the all-(d-1) action)
* nonlinear: R(a) = sum_i a_i + N(0, 2^2) + U(-3, 3), noise baked per entry
  at construction, so repeated queries of the same entry are identical
  (deterministic bandit).  Per-entry noise variance is 4 + 3 = 7.

Noise contract (stable across versions, regression-pinned in tests): entry
noise is a pure function of (seed, linear index).  Three 64-bit words come
from chaining the splitmix64 finalizer

    h_s = mix(seed * GOLDEN + GOLDEN)
    h   = mix(mix(h_s ^ index) + stream * GOLDEN),   stream in {0, 1, 2}

each word maps to a 53-bit uniform in (0, 1); streams 0 and 1 feed a
Box-Muller Gaussian scaled by sigma=2 and stream 2 the uniform component
6*u - 3.  The same function backs both the dense table fill and on-demand
functional evaluation, so the two storage modes agree bit-exactly.

Storage: a dense float64 table when d**n <= dense_cap (default 10**7),
otherwise functional evaluation per query.  Explicit-table tensors (e.g. the
coordination trap) are always dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .actions import JointAction, JointActionSpace
from .errors import EnumerationCapError, InvalidActionError

DEFAULT_DENSE_CAP = 10_000_000

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps mod 2**64 by design.
    with np.errstate(over="ignore"):
        z = x.astype(_U64, copy=True)
        z ^= z >> _U64(30)
        z *= _MIX1
        z ^= z >> _U64(27)
        z *= _MIX2
        z ^= z >> _U64(31)
    return z


def _uniform_words(seed: int, index: np.ndarray, stream: int) -> np.ndarray:
    """53-bit uniforms in (0,1), a pure function of (seed, index, stream)."""
    with np.errstate(over="ignore"):
        h_seed = _mix64(np.array([_U64(seed % (1 << 64)) * _GOLDEN + _GOLDEN]))[0]
        h = _mix64(h_seed ^ index.astype(_U64))
        h = _mix64(h + _U64(stream) * _GOLDEN)
    return ((h >> _U64(11)).astype(np.float64) + 0.5) * (2.0**-53)


def entry_noise(seed: int, index) -> np.ndarray | float:
    """Baked per-entry noise N(0, 2^2) + U(-3, 3) for the nonlinear family."""
    idx = np.atleast_1d(np.asarray(index, dtype=np.uint64))
    u1 = _uniform_words(seed, idx, 0)
    u2 = _uniform_words(seed, idx, 1)
    u3 = _uniform_words(seed, idx, 2)
    gauss = 2.0 * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    unif = 6.0 * u3 - 3.0
    out = gauss + unif
    return out if np.ndim(index) else float(out[0])


def _digit_sums(space: JointActionSpace, index: np.ndarray) -> np.ndarray:
    """sum_i a_i for a vector of linear indices."""
    rem = np.asarray(index, dtype=np.int64).copy()
    total = np.zeros_like(rem)
    for _ in range(space.n):
        rem, last = np.divmod(rem, space.d)
        total += last
    return total


class PayoffTensor:
    """Immutable deterministic reward table over a joint-action space."""

    def __init__(
        self,
        space: JointActionSpace,
        kind: str,
        seed: int = 0,
        dense_cap: int = DEFAULT_DENSE_CAP,
        table: np.ndarray | None = None,
        per_query_noise_std: float = 0.0,
        extra: dict | None = None,
    ):
        if kind not in ("linear", "nonlinear", "table"):
            raise ValueError(f"unknown payoff kind {kind!r}")
        self.space = space
        self.kind = kind
        self.seed = int(seed)
        self.dense_cap = int(dense_cap)
        self.per_query_noise_std = float(per_query_noise_std)
        self.extra = dict(extra or {})
        if kind == "table":
            if table is None:
                raise ValueError("table kind needs explicit values")
            values = np.asarray(table, dtype=np.float64).reshape(-1)
            if values.shape[0] != space.size:
                raise ValueError(
                    f"table has {values.shape[0]} entries, space needs {space.size}"
                )
            self._dense = values
        elif space.size <= self.dense_cap:
            idx = np.arange(space.size, dtype=np.int64)
            self._dense = self._functional(idx)
        else:
            self._dense = None

    # -- evaluation ------------------------------------------------------

    def _functional(self, index: np.ndarray) -> np.ndarray:
        base = _digit_sums(self.space, index).astype(np.float64)
        if self.kind == "nonlinear":
            return base + entry_noise(self.seed, index)
        return base

    def reward_by_index(self, index):
        """Reward at one linear index or a vector of them (vectorized)."""
        scalar = np.ndim(index) == 0
        idx = np.atleast_1d(np.asarray(index, dtype=np.int64))
        if np.any(idx < 0) or np.any(idx >= self.space.size):
            raise InvalidActionError("linear index out of range")
        if self._dense is not None:
            out = self._dense[idx]
        else:
            out = self._functional(idx)
        return float(out[0]) if scalar else out

    def reward(self, a: JointAction, rng: np.random.Generator | None = None) -> float:
        """Deterministic reward; optional per-query observation noise when enabled."""
        r = self.reward_by_index(self.space.linear_index(a))
        if self.per_query_noise_std > 0.0 and rng is not None:
            r += self.per_query_noise_std * rng.standard_normal()
        return float(r)

    def values(self) -> np.ndarray:
        """The full flat reward table; raises when the space exceeds the cap."""
        if self._dense is not None:
            return self._dense
        raise EnumerationCapError(
            f"space size {self.space.size} exceeds dense cap {self.dense_cap}",
            size=self.space.size,
            cap=self.dense_cap,
        )

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    # -- serialization ---------------------------------------------------

    def to_config(self) -> dict:
        cfg = {
            "kind": self.kind,
            "n": self.space.n,
            "d": self.space.d,
            "seed": self.seed,
            "dense_cap": self.dense_cap,
        }
        if self.extra:
            cfg["extra"] = dict(self.extra)
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "PayoffTensor":
        kind = cfg["kind"]
        if kind == "linear":
            return make_linear(cfg["n"], cfg["d"], cfg.get("seed", 0),
                               dense_cap=cfg.get("dense_cap", DEFAULT_DENSE_CAP))
        if kind == "nonlinear":
            return make_nonlinear(cfg["n"], cfg["d"], cfg.get("seed", 0),
                                  dense_cap=cfg.get("dense_cap", DEFAULT_DENSE_CAP))
        extra = cfg.get("extra", {})
        if extra.get("family") == "coordination_trap":
            return make_coordination_trap(
                trap_value=extra.get("trap_value", 9.0),
                escape_value=extra.get("escape_value", 10.0),
                floor=extra.get("floor", 0.0),
                board_size=extra.get("board_size", 4),
                block_corner=extra.get("block_corner"),
            ).tensor
        raise ValueError("explicit-table tensors are not reconstructable from config")


def make_linear(
    n: int, d: int, seed: int = 0, dense_cap: int = DEFAULT_DENSE_CAP
) -> PayoffTensor:
    """R(a) = sum_i a_i; the seed is carried but unused (no noise)."""
    return PayoffTensor(JointActionSpace(n, d), "linear", seed=seed, dense_cap=dense_cap)


def make_nonlinear(
    n: int, d: int, seed: int = 0, dense_cap: int = DEFAULT_DENSE_CAP
) -> PayoffTensor:
    """Linear base plus baked per-entry N(0,4) + U(-3,3) noise keyed by seed."""
    return PayoffTensor(JointActionSpace(n, d), "nonlinear", seed=seed, dense_cap=dense_cap)


@dataclass(frozen=True)
class TrapInstance:
    """A certified coordination trap: singles all lose, one 2x2 block escapes."""

    tensor: PayoffTensor
    trap: JointAction
    escape_actions: tuple[JointAction, ...]


def make_coordination_trap(
    trap_value: float = 9.0,
    escape_value: float = 10.0,
    floor: float = 0.0,
    board_size: int = 4,
    block_corner: int | None = None,
) -> TrapInstance:
    """Two-agent trap: R(0,0)=trap_value, R=escape_value on the 2x2 block
    {block_corner, block_corner+1}^2, floor elsewhere.  block_corner
    defaults to board_size-2 (far corner).

    At the trap every one-agent deviation drops to the floor (g1 = floor -
    trap_value < 0) while coordinated pair deviations into the escape block
    gain escape_value - trap_value > 0, so g1 < 0 < g2.

    The defaults keep trap_value close to escape_value on purpose.  A model
    that is additive across agents credits a single move toward the block
    with roughly half the block's height; keeping trap_value well above
    escape_value / 2 means no single deviation ever looks better than the
    trap, so escaping genuinely requires proposing a coordinated pair.
    Larger board_size dilutes how often supervision queries happen to land
    on block cells, making the family harder for singles-only search.
    """
    if not floor < trap_value < escape_value:
        raise ValueError("need floor < trap_value < escape_value")
    if board_size < 4:
        raise ValueError("need board_size >= 4 to separate trap from block")
    if block_corner is None:
        block_corner = board_size - 2
    if not 1 <= block_corner <= board_size - 2:
        raise ValueError("block must fit on the board and avoid the trap")
    space = JointActionSpace(2, board_size)
    values = np.full(space.size, float(floor))
    values[space.linear_index((0, 0))] = float(trap_value)
    block = [
        (x, y)
        for x in (block_corner, block_corner + 1)
        for y in (block_corner, block_corner + 1)
    ]
    for a in block:
        values[space.linear_index(a)] = float(escape_value)
    tensor = PayoffTensor(
        space,
        "table",
        table=values,
        extra={
            "family": "coordination_trap",
            "trap_value": float(trap_value),
            "escape_value": float(escape_value),
            "floor": float(floor),
            "board_size": int(board_size),
            "block_corner": int(block_corner),
        },
    )
    return TrapInstance(tensor=tensor, trap=(0, 0), escape_actions=tuple(block))


@dataclass(frozen=True)
class EpisodicMatGame:
    """Fixed-horizon episodic wrapper: the same tensor is played each step."""

    tensor: PayoffTensor
    horizon: int = 1
    discount: float = 0.99

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")

    @property
    def space(self) -> JointActionSpace:
        return self.tensor.space

    def episode_return(self, actions: Sequence[JointAction]) -> float:
        if len(actions) != self.horizon:
            raise ValueError(f"episode needs {self.horizon} actions, got {len(actions)}")
        return float(
            sum(self.discount**t * self.tensor.reward(a) for t, a in enumerate(actions))
        )
