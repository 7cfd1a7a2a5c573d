"""Exception hierarchy shared by all modules."""


class SPDCError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SPDCError, ValueError):
    """An input lies outside the region where a model is defined."""


class EvanescentError(DomainError):
    """Transverse wavevector at or beyond the total wavenumber."""


class SolverError(SPDCError, RuntimeError):
    """A root bracket or iterative solve failed."""


class AnalysisError(SPDCError, ValueError):
    """Data cannot be reduced (flat, empty or all-zero input)."""


class ResolutionError(SPDCError, ValueError):
    """Sampling is too coarse for the requested instrument response."""


class ConfigError(SPDCError, ValueError):
    """Configuration failed validation; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
