"""Exception types shared across the package."""


class GroupClosureError(RuntimeError):
    """Group closure exceeded its element cap or failed to close."""


class ResourceLimitError(RuntimeError):
    """Requested computation exceeds a documented size/resource bound."""


class FitError(RuntimeError):
    """Nonlinear fit could not produce usable parameters."""
