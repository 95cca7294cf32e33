"""Joint-action combinatorics for cooperative multi-agent search.

A joint action assigns one local action index in [0, d) to each of n agents
and is stored as a plain tuple of ints, so equality and hashing are
componentwise for free.  The n-hot encoding uses agent-major blocks::

    index:   0 ........ d-1 | d ........ 2d-1 | ... | (n-1)d ....... nd-1
    block:   agent 0        | agent 1         | ... | agent n-1
    psi(a):  1 at i*d + a_i inside block i, 0 elsewhere

Linear indices treat agent 0 as the most significant base-d digit, which is
exactly the C-order flattening of a payoff tensor of shape (d,)*n.  Every
"smallest linear index" tie-break in the package refers to this convention.

Only uniform d across agents is supported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    InfeasibleDeviationError,
    InvalidActionError,
    InvalidPairError,
    NoPairAvailableError,
)

JointAction = tuple[int, ...]


class Direction(NamedTuple):
    """One agent switching to a new local action; target must differ from the current one."""

    agent: int
    target: int


@dataclass(frozen=True)
class JointActionSpace:
    """n agents, d local actions each; |A| = d**n joint actions."""

    n: int
    d: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not isinstance(self.d, int):
            raise InvalidActionError(f"n and d must be ints, got {self.n!r}, {self.d!r}")
        if self.n < 1:
            raise InvalidActionError(f"need at least one agent, got n={self.n}")
        if self.d < 2:
            raise InvalidActionError(f"need at least two local actions, got d={self.d}")

    @property
    def size(self) -> int:
        # Exact big int; d**n can exceed 2**63 for large instances.
        return self.d**self.n

    @property
    def encoding_dim(self) -> int:
        return self.n * self.d

    def contains(self, a: JointAction) -> bool:
        return (
            isinstance(a, tuple)
            and len(a) == self.n
            and all(isinstance(x, (int, np.integer)) and 0 <= x < self.d for x in a)
        )

    def validate(self, a: JointAction) -> None:
        if not self.contains(a):
            raise InvalidActionError(f"{a!r} is not a joint action of n={self.n}, d={self.d}")

    def linear_index(self, a: JointAction) -> int:
        self.validate(a)
        idx = 0
        for x in a:
            idx = idx * self.d + int(x)
        return idx

    def action_at(self, index: int) -> JointAction:
        if not 0 <= index < self.size:
            raise InvalidActionError(f"linear index {index} out of range for size {self.size}")
        digits = []
        rem = int(index)
        for _ in range(self.n):
            rem, last = divmod(rem, self.d)
            digits.append(last)
        return tuple(reversed(digits))

    def iter_actions(self) -> Iterator[JointAction]:
        # product increments the last coordinate fastest, matching linear order.
        return itertools.product(range(self.d), repeat=self.n)

    def random_action(self, rng: np.random.Generator) -> JointAction:
        return tuple(int(x) for x in rng.integers(0, self.d, size=self.n))


def encode_nhot(space: JointActionSpace, a: JointAction) -> np.ndarray:
    """Agent-major n-hot encoding: exactly one 1 per block of d entries."""
    space.validate(a)
    psi = np.zeros(space.encoding_dim, dtype=np.float64)
    for i, x in enumerate(a):
        psi[i * space.d + int(x)] = 1.0
    return psi


def _check_direction(a: JointAction, u: Direction, space: JointActionSpace | None) -> None:
    if not 0 <= u.agent < len(a):
        raise InvalidActionError(f"direction agent {u.agent} out of range for {len(a)} agents")
    if u.target < 0 or (space is not None and u.target >= space.d):
        raise InfeasibleDeviationError(f"target {u.target} out of range")
    if u.target == a[u.agent]:
        raise InfeasibleDeviationError(
            f"direction {u} is infeasible at {a}: agent already plays {u.target}"
        )


def apply_direction(
    a: JointAction, u: Direction, space: JointActionSpace | None = None
) -> JointAction:
    """The one-agent deviation a^(u): agent u.agent switches to u.target."""
    _check_direction(a, u, space)
    out = list(a)
    out[u.agent] = int(u.target)
    return tuple(out)


def apply_pair(
    a: JointAction, u: Direction, v: Direction, space: JointActionSpace | None = None
) -> JointAction:
    """The two-agent deviation a^(u,v); u and v must touch distinct agents."""
    if u.agent == v.agent:
        raise InvalidPairError(f"pair ({u}, {v}) touches agent {u.agent} twice")
    _check_direction(a, u, space)
    _check_direction(a, v, space)
    out = list(a)
    out[u.agent] = int(u.target)
    out[v.agent] = int(v.target)
    return tuple(out)


def neighbors(
    space: JointActionSpace, a: JointAction
) -> list[tuple[Direction, JointAction]]:
    """All n*(d-1) one-agent deviations, agent-major, targets ascending."""
    space.validate(a)
    out = []
    for i in range(space.n):
        for j in range(space.d):
            if j == a[i]:
                continue
            u = Direction(i, j)
            out.append((u, apply_direction(a, u)))
    return out


def direction_pair_count(space: JointActionSpace) -> int:
    """Number of feasible ordered distinct-agent direction pairs at any action."""
    return space.n * (space.n - 1) * (space.d - 1) ** 2


def sample_direction_pair(
    space: JointActionSpace, a: JointAction, rng: np.random.Generator
) -> tuple[Direction, Direction]:
    """Uniform draw over feasible ordered distinct-agent direction pairs.

    Every (agent, other-agent, target, target) choice below has the same
    number of outcomes, so independent uniform component draws give the
    uniform law over all n*(n-1)*(d-1)**2 ordered pairs.
    """
    space.validate(a)
    if space.n < 2:
        raise NoPairAvailableError("direction pairs need at least two agents")
    i = int(rng.integers(0, space.n))
    k = int(rng.integers(0, space.n - 1))
    if k >= i:
        k += 1
    j = int(rng.integers(0, space.d - 1))
    if j >= a[i]:
        j += 1
    l = int(rng.integers(0, space.d - 1))
    if l >= a[k]:
        l += 1
    return Direction(i, j), Direction(k, l)
