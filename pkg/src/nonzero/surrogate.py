"""Additive return surrogate with an asinh link over n-hot joint actions.

The surrogate scores a joint action a as z = <theta, psi(a)> (psi the
agent-major n-hot encoding, so z is a sum of one theta entry per agent) and
predicts the return eta = c * asinh(alpha * z).  The compressive link keeps
predictions stable across reward scales while leaving the ranking of actions
identical to the ranking of raw scores.

Discrete difference operators on eta:

    delta1(a, u)    = eta(a^(u)) - eta(a)
    delta2(a, u, v) = eta(a^(u,v)) - eta(a^(u)) - eta(a^(v)) + eta(a)

and the exact decomposition
eta(a^(u,v)) - eta(a) = delta1(a,u) + delta1(a,v) + delta2(a,u,v).

Supervision couples a value target with first/second difference targets: one
sample carries y = [f(a), f(a^(u)), f(a^(u)) - f(a), mixed second difference]
for a reward source f, and the loss is the mean over samples of one quarter
of the squared four-component residual.  The unscaled squared residual of a
single sample is the per-step composite error xi used in traces.

An identity link ("linear", eta = c * alpha * z) exists for tests and
ablations only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .actions import (
    Direction,
    JointAction,
    JointActionSpace,
    apply_direction,
    apply_pair,
)
from .errors import EmptyBatchError, InvalidPairError, NumericFailureError

_LINKS = ("asinh", "linear")


@dataclass(frozen=True)
class SurrogateParams:
    """Value-type parameter bundle: weight vector plus link constants."""

    theta: np.ndarray
    c: float = 1.0
    alpha: float = 1.0
    link: str = "asinh"

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise ValueError(f"theta must be a flat vector, got shape {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise NumericFailureError("theta contains non-finite entries")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"link scale c must be positive and finite, got {self.c}")
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"link slope alpha must be positive and finite, got {self.alpha}")
        if self.link not in _LINKS:
            raise ValueError(f"unknown link {self.link!r}, expected one of {_LINKS}")
        object.__setattr__(self, "theta", theta)

    @staticmethod
    def zeros(
        space: JointActionSpace, c: float = 1.0, alpha: float = 1.0, link: str = "asinh"
    ) -> "SurrogateParams":
        return SurrogateParams(np.zeros(space.encoding_dim), c=c, alpha=alpha, link=link)

    def with_theta(self, theta: np.ndarray) -> "SurrogateParams":
        return replace(self, theta=theta)

    def to_record(self) -> dict:
        return {
            "theta": [float(x) for x in self.theta],
            "c": float(self.c),
            "alpha": float(self.alpha),
            "link": self.link,
        }

    @staticmethod
    def from_record(record: dict) -> "SurrogateParams":
        return SurrogateParams(
            np.asarray(record["theta"], dtype=np.float64),
            c=float(record["c"]),
            alpha=float(record["alpha"]),
            link=str(record.get("link", "asinh")),
        )


def link_value(p: SurrogateParams, z):
    """eta as a function of the raw score z (scalar or ndarray)."""
    if p.link == "asinh":
        return p.c * np.arcsinh(p.alpha * z)
    return p.c * (p.alpha * z)


def link_slope(p: SurrogateParams, z):
    """d eta / d z; bounded by c * alpha, decaying like 1/|z| for asinh."""
    if p.link == "asinh":
        az = p.alpha * z
        return p.c * p.alpha / np.sqrt(1.0 + az * az)
    return p.c * p.alpha * np.ones_like(np.asarray(z, dtype=np.float64))


def _offsets(space: JointActionSpace, a: JointAction) -> list[int]:
    return [i * space.d + int(x) for i, x in enumerate(a)]


def action_score(p: SurrogateParams, space: JointActionSpace, a: JointAction) -> float:
    """Raw score z = <theta, psi(a)> computed without materializing psi."""
    space.validate(a)
    if p.theta.shape[0] != space.encoding_dim:
        raise ValueError(
            f"theta has dim {p.theta.shape[0]}, space needs {space.encoding_dim}"
        )
    return float(sum(p.theta[o] for o in _offsets(space, a)))


def score(p: SurrogateParams, psi: np.ndarray) -> float:
    """Raw score from an explicit encoding vector."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != p.theta.shape:
        raise ValueError(f"psi shape {psi.shape} does not match theta {p.theta.shape}")
    return float(np.dot(p.theta, psi))


def eta(p: SurrogateParams, space: JointActionSpace, a: JointAction) -> float:
    return float(link_value(p, action_score(p, space, a)))


def delta1(
    p: SurrogateParams, space: JointActionSpace, a: JointAction, u: Direction
) -> float:
    """First difference of eta along one feasible direction."""
    return eta(p, space, apply_direction(a, u, space)) - eta(p, space, a)


def delta2(
    p: SurrogateParams,
    space: JointActionSpace,
    a: JointAction,
    u: Direction,
    v: Direction,
) -> float:
    """Mixed second difference of eta for a distinct-agent direction pair."""
    e_uv = eta(p, space, apply_pair(a, u, v, space))
    e_u = eta(p, space, apply_direction(a, u, space))
    e_v = eta(p, space, apply_direction(a, v, space))
    return e_uv - e_u - e_v + eta(p, space, a)


def decomposition_residual(
    p: SurrogateParams,
    space: JointActionSpace,
    a: JointAction,
    u: Direction,
    v: Direction,
) -> float:
    """Residual of the exact two-step decomposition; zero up to rounding."""
    e_a = eta(p, space, a)
    e_u = eta(p, space, apply_direction(a, u, space))
    e_v = eta(p, space, apply_direction(a, v, space))
    e_uv = eta(p, space, apply_pair(a, u, v, space))
    d1u = e_u - e_a
    d1v = e_v - e_a
    d2 = e_uv - e_u - e_v + e_a
    return (e_uv - e_a) - (d1u + d1v + d2)


def predict4(
    p: SurrogateParams,
    space: JointActionSpace,
    a: JointAction,
    u: Direction,
    v: Direction | None,
) -> np.ndarray:
    """Prediction vector [eta(a), eta(a^(u)), first difference, mixed second difference].

    Components are built from one eta evaluation per action so component 2 is
    exactly component 1 minus component 0.  v=None (single-agent spaces)
    zeroes the interaction component.
    """
    e_a = eta(p, space, a)
    e_u = eta(p, space, apply_direction(a, u, space))
    if v is None:
        d2 = 0.0
    else:
        e_v = eta(p, space, apply_direction(a, v, space))
        e_uv = eta(p, space, apply_pair(a, u, v, space))
        d2 = e_uv - e_u - e_v + e_a
    return np.array([e_a, e_u, e_u - e_a, d2], dtype=np.float64)


@dataclass(frozen=True)
class SupervisionSample:
    """One backup's targets: anchor action, direction pair, 4-vector y.

    y = [f(a), f(a^(u)), f(a^(u)) - f(a), mixed second difference of f];
    the third component must equal y[1] - y[0] (checked here), which holds
    whenever the targets come from a single consistent reward source.
    """

    a: JointAction
    u: Direction
    v: Direction | None
    y: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.v is not None and self.u.agent == self.v.agent:
            raise InvalidPairError(f"supervision pair touches agent {self.u.agent} twice")
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (4,):
            raise ValueError(f"targets must be a 4-vector, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise NumericFailureError("supervision targets contain non-finite entries")
        scale = max(1.0, float(np.max(np.abs(y[:2]))))
        if abs(y[2] - (y[1] - y[0])) > 1e-9 * scale:
            raise ValueError(
                "inconsistent targets: first-difference component must equal y[1] - y[0]"
            )
        if self.v is None and y[3] != 0.0:
            raise ValueError("interaction target must be 0 when no pair direction is given")
        object.__setattr__(self, "y", y)


def supervision_from_reward(
    reward_fn: Callable[[JointAction], float],
    space: JointActionSpace,
    a: JointAction,
    u: Direction,
    v: Direction | None,
) -> SupervisionSample:
    """Build consistent targets by querying a reward source at the four actions."""
    r_a = float(reward_fn(a))
    r_u = float(reward_fn(apply_direction(a, u, space)))
    if v is None:
        d2 = 0.0
    else:
        r_v = float(reward_fn(apply_direction(a, v, space)))
        r_uv = float(reward_fn(apply_pair(a, u, v, space)))
        d2 = r_uv - r_u - r_v + r_a
    return SupervisionSample(a=a, u=u, v=v, y=np.array([r_a, r_u, r_u - r_a, d2]))


def sample_residuals(
    p: SurrogateParams, space: JointActionSpace, s: SupervisionSample
) -> np.ndarray:
    return predict4(p, space, s.a, s.u, s.v) - s.y


def composite_error(
    p: SurrogateParams, space: JointActionSpace, s: SupervisionSample
) -> float:
    """Unscaled squared residual of one sample; the per-step xi of traces."""
    e = sample_residuals(p, space, s)
    return float(np.dot(e, e))


def nonuct_loss(
    p: SurrogateParams, space: JointActionSpace, batch: Sequence[SupervisionSample]
) -> float:
    """Mean over the batch of one quarter of the squared residual 4-vector."""
    if len(batch) == 0:
        raise EmptyBatchError("supervision batch is empty")
    return sum(composite_error(p, space, s) for s in batch) / (4.0 * len(batch))


def loss_gradient(
    p: SurrogateParams, space: JointActionSpace, batch: Sequence[SupervisionSample]
) -> np.ndarray:
    """Analytic gradient of nonuct_loss in theta.

    Collecting the chain rule per touched action gives, per sample with
    residuals e and score slopes g'(z_j) at a0=a, a1=a^(u), a2=a^(v),
    a3=a^(u,v):

        grad = 1/2 * [ (e0 - e2 + e3) g'(z0) psi(a0) + (e1 + e2 - e3) g'(z1) psi(a1)
                       - e3 g'(z2) psi(a2) + e3 g'(z3) psi(a3) ]

    so entries of theta touching no action in the batch stay exactly zero.
    """
    if len(batch) == 0:
        raise EmptyBatchError("supervision batch is empty")
    grad = np.zeros_like(p.theta)
    for s in batch:
        acts: list[tuple[JointAction, float]] = []
        e = sample_residuals(p, space, s)
        a0 = s.a
        a1 = apply_direction(s.a, s.u, space)
        acts.append((a0, e[0] - e[2] + e[3]))
        acts.append((a1, e[1] + e[2] - e[3]))
        if s.v is not None:
            acts.append((apply_direction(s.a, s.v, space), -e[3]))
            acts.append((apply_pair(s.a, s.u, s.v, space), e[3]))
        for act, coef in acts:
            if coef == 0.0:
                continue
            slope = link_slope(p, action_score(p, space, act))
            w = 0.5 * coef * float(slope)
            for o in _offsets(space, act):
                grad[o] += w
    grad /= len(batch)
    return grad


def sgd_step(
    p: SurrogateParams,
    space: JointActionSpace,
    batch: Sequence[SupervisionSample],
    learning_rate: float,
) -> SurrogateParams:
    """One plain gradient step; raises NumericFailureError if theta leaves R^nd."""
    if not (learning_rate > 0 and np.isfinite(learning_rate)):
        raise ValueError(f"learning rate must be positive and finite, got {learning_rate}")
    theta = p.theta - learning_rate * loss_gradient(p, space, batch)
    if not np.all(np.isfinite(theta)):
        raise NumericFailureError("sgd step produced non-finite theta")
    return p.with_theta(theta)
