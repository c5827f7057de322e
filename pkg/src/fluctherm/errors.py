"""Exception types shared across the package."""
from __future__ import annotations


class ConfigError(ValueError):
    """A run configuration failed to parse or validate."""


class CertificationError(RuntimeError):
    """A mandatory pre-simulation check (series bounds, cutoff condition)
    failed; the pipeline aborts rather than degrade the error budget."""


class QspConvergenceError(RuntimeError):
    """The phase optimizer stopped above the acceptance residual."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


class NoSignalError(RuntimeError):
    """Amplitude amplification received a state with zero success amplitude."""
