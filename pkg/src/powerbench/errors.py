"""Exception and warning types.

Each error class carries the process exit code the CLI maps it to.
"""


class PowerbenchError(Exception):
    exit_code = 1


class ValidationError(PowerbenchError, ValueError):
    """Invalid input data or configuration."""

    exit_code = 1


class ParseError(ValidationError):
    """A recording, manifest or scenario file could not be parsed."""


class MetricDomainError(PowerbenchError, ValueError):
    """A metric is undefined for the given inputs (zero range, no successes, ...)."""

    exit_code = 2


class WearUnavailableError(MetricDomainError):
    """Current telemetry needed by the wear metric is missing."""


class OutputError(PowerbenchError, OSError):
    exit_code = 3


class PowerbenchWarning(UserWarning):
    """Non-fatal data-quality notice; never changes the exit code."""
