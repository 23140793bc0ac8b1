"""Error types shared across modules."""

from __future__ import annotations

import numpy as np


class JccorrError(Exception):
    """Base class for library errors."""


class NormalizationUndefined(JccorrError):
    """A correlation normalization denominator vanished.

    Carries the unnormalized numerator series so callers can still inspect
    the raw correlation (the mean field crosses zero at some phases).
    """

    def __init__(self, message: str, tau_grid: np.ndarray | None = None,
                 numerator: np.ndarray | None = None):
        super().__init__(message)
        self.tau_grid = tau_grid
        self.numerator = numerator


class DegenerateSteadyState(JccorrError):
    """The Liouvillian null space is (numerically) more than one-dimensional."""

    def __init__(self, message: str, null_dim: int):
        super().__init__(message)
        self.null_dim = null_dim


class IntegrationFault(JccorrError):
    """A stochastic integration step failed (e.g. norm underflow)."""


class ZeroStarts(JccorrError):
    """No APD starts were collected; the conditional average is undefined."""
