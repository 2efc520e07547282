"""Exception hierarchy for the certified renormalization laboratory.

Every failure mode that a caller might reasonably catch gets its own class;
all inherit from RenormError so a bare `except RenormError` is safe at CLI
boundaries.
"""

from __future__ import annotations


class RenormError(Exception):
    """Base class for all package errors."""


class ScheduleError(RenormError):
    """A partial-quotient schedule violates the standing hypotheses."""


class CertificationError(RenormError):
    """A certified bound could not be established at the requested guard."""


class CompositionError(RenormError):
    """A map composition or evaluation left the defining domain."""


class BreakCollisionError(RenormError):
    """Two break points were found to lie on the same orbit."""


class ConstructionError(RenormError):
    """Requested map or partition cannot be realized from the given data."""


class ResourceError(RenormError):
    """A watchdog limit (bit size, iteration count) was exceeded."""


class ExperimentError(RenormError):
    """A pipeline stage failed; `stage` names the stage that raised."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
