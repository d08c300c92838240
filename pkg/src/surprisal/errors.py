"""Exception types shared across the package."""


class SurprisalError(Exception):
    """Base class for all package-specific failures."""


class ArityError(SurprisalError, ValueError):
    """An observation does not have the shape or kind a model expects."""


class ValidationError(SurprisalError, ValueError):
    """Invalid parameters, options, or malformed input data."""


class FitError(SurprisalError, RuntimeError):
    """A numerical fit failed to converge.

    ``diagnostics`` carries best-so-far state (parameters, objective values,
    iteration traces) so callers can report what was tried.
    """

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}
