"""Exception and warning types shared across horolab."""

from __future__ import annotations


class HorolabError(Exception):
    """Base class for library errors."""


class ValidationError(HorolabError, ValueError):
    """Input violates a documented precondition or type invariant."""


class NumericalError(HorolabError, ArithmeticError):
    """A numerical procedure failed to reach its target."""


class ConvergenceError(NumericalError):
    """Iteration or refinement did not converge; carries the last state."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class BracketError(NumericalError):
    """No sign change found in the search window."""


class PoleError(NumericalError):
    """Evaluation requested at a pole. ``residue`` holds the simple-pole residue."""

    def __init__(self, message, location, residue=None):
        super().__init__(message)
        self.location = location
        self.residue = residue


class PrecisionWarning(UserWarning):
    """Result is computed but its accuracy is degraded."""
