"""Exception types shared across the toolkit."""


class FractalDimError(Exception):
    """Base class for toolkit errors."""


class DomainError(FractalDimError, ValueError):
    """An argument lies outside the operation's domain."""


class UnsupportedDimensionError(DomainError):
    pass


class ResourceError(FractalDimError):
    """A computation would exceed its memory or size budget."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class ScheduleTypeError(FractalDimError, TypeError):
    """The schedule kind does not support the requested operation."""


class InconsistentHorizonError(FractalDimError):
    """An oracle cannot answer without inspecting indices past its horizon."""


class FitError(FractalDimError):
    """A regression window is too small or degenerate."""


class FitWindowError(FitError):
    """No usable window between trivial and saturated scales."""
