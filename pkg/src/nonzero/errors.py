"""Shared exception types.

Everything derives from ValueError or RuntimeError so callers that do not
care about the fine-grained kind can catch the broad builtin instead.
"""


class InvalidActionError(ValueError):
    """A joint action does not belong to the space it was used with."""


class InfeasibleDeviationError(ValueError):
    """A direction's target equals the agent's current action (or is out of range)."""


class InvalidPairError(ValueError):
    """A direction pair touches the same agent twice."""


class NoPairAvailableError(ValueError):
    """No distinct-agent direction pair exists (single-agent space)."""


class EmptyBatchError(ValueError):
    """A supervision batch was empty."""


class EnumerationCapError(RuntimeError):
    """An exact oracle computation would enumerate more entries than its cap."""

    def __init__(self, message: str, size: int | None = None, cap: int | None = None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class NumericFailureError(RuntimeError):
    """A numeric quantity became non-finite (diverged optimization, bad input)."""


class ConfigError(ValueError):
    """An experiment config file could not be parsed or validated."""
