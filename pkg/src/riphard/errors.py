"""Exception types shared across the toolkit.

Each carries the process exit code the CLI maps it to.
"""


class RipHardError(Exception):
    exit_code = 2


class InputError(RipHardError, ValueError):
    """Malformed or out-of-range input."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConstructionError(InputError):
    """A matrix or transform cannot be built from the given arguments."""


class CapacityError(RipHardError):
    """A brute-force enumeration would exceed its configured budget."""

    exit_code = 3
