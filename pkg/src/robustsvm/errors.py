"""Exception types shared across the package.

The CLI maps InputError (and subclasses) to exit code 2 and
NumericalError to exit code 3.
"""


class InputError(ValueError):
    """A caller-supplied value violates an operation's contract."""


class DataFormatError(InputError):
    """A data file is malformed. Carries the failing location when known."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.offset = offset
        self.line = line


class NumericalError(RuntimeError):
    """A non-finite value appeared mid-computation."""

    def __init__(self, message: str, *, iteration: int | None = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration
