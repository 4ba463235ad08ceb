"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad argument to an operation (wrong shape, out of range, empty)."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(ArithmeticError):
    """Numerical failure: divergence, non-convergence, exploding gradients."""


class FormatError(ValueError):
    """A persisted document is corrupt or has the wrong version."""
