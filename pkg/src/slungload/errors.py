"""Exception types shared across the simulator, environments, learner, and CLI."""

from __future__ import annotations


class SlungloadError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SlungloadError):
    """An array argument has a shape incompatible with the expected layout."""


class ModeError(SlungloadError):
    """An operation that requires a specific cable mode was called in the other one."""


class NonFiniteState(SlungloadError):
    """Integration produced NaN or Inf in at least one state field."""


class DegenerateGeometry(SlungloadError):
    """A geometric quantity is undefined, e.g. payload coincident with the quadrotor."""


class TrackError(SlungloadError):
    """A track definition is inconsistent or references an unknown preset."""


class ContextMismatch(SlungloadError):
    """A scenario context of the wrong kind was supplied to an observation builder."""


class SteppedAfterDone(SlungloadError):
    """A single (non auto-resetting) environment was stepped after termination."""


class FormatError(SlungloadError):
    """A checkpoint or log file is malformed, truncated, or of the wrong variant."""


class EmptyLog(SlungloadError):
    """Metrics were requested for a rollout log that contains no steps."""


class ConfigError(SlungloadError):
    """A run configuration failed validation (unknown key, bad type, bad value)."""


class NonFiniteLoss(SlungloadError):
    """A training loss or gradient became NaN or Inf; the update was aborted."""
