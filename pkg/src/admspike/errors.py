"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: validation/configuration problems
exit 1, I/O problems (plain OSError) exit 2, numerical failures exit 3.
"""


class ValidationError(ValueError):
    """Input data violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """A text input could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ValidationError):
    """A configuration value or combination of values is unusable."""


class FormatError(ValidationError):
    """A binary or structured payload does not follow the declared layout."""


class NumericalError(ArithmeticError):
    """A numerical procedure cannot produce a meaningful result."""


class DegenerateSignalWarning(UserWarning):
    """Warned when an operation degenerates (e.g. zero noise scale)."""
