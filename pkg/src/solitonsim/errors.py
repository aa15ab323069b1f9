"""Exception types shared across the simulator."""

from __future__ import annotations


class SolitonsimError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpecError(SolitonsimError, ValueError):
    """Unphysical membrane constants, segment geometry, or stimulus."""


class TopologyError(SolitonsimError, ValueError):
    """Network cannot be simulated: malformed wiring or a singular system."""


class InstabilityError(SolitonsimError, RuntimeError):
    """Transient solve produced a non-finite voltage."""

    def __init__(self, message: str, step: int) -> None:
        super().__init__(message)
        self.step = step


class NotApplicableError(SolitonsimError, ValueError):
    """An analysis precondition does not hold for the given waveform."""


class ScenarioError(SolitonsimError, ValueError):
    """Scenario file violates the schema; message names the field path."""
