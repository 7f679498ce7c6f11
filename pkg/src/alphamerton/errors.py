"""Exception types shared across the package."""


class AlphamertonError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(AlphamertonError, ValueError):
    """A numeric input violates its stated constraint (sign, range, finiteness)."""


class DimensionError(AlphamertonError, ValueError):
    """Array shapes are inconsistent; the message names the offending axis."""


class DomainError(AlphamertonError, ValueError):
    """Evaluation requested outside the valid domain of a coefficient or policy."""


class ValidationError(AlphamertonError, ValueError):
    """A market failed validation; carries the list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SolverError(AlphamertonError, RuntimeError):
    """A linear solve or optimization could not produce a trustworthy answer."""


class SimulationError(AlphamertonError, RuntimeError):
    """A Monte Carlo run failed (non-finite states or too many flagged paths)."""


class ConfigError(AlphamertonError, ValueError):
    """An experiment config file could not be parsed or validated."""
