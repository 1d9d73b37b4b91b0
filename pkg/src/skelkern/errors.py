"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalFailure(ArithmeticError):
    """Raised when a decomposition or fit cannot be computed.

    ``mode`` is set when the failure is tied to one tensor mode (HOSVD).
    """

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class ParseError(ValueError):
    """Malformed input file. Carries the offending path and 1-based line."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DegenerateSegment(ValueError):
    """A skeleton edge has zero length, so its direction is undefined."""

    def __init__(self, parent, child):
        super().__init__(f"zero-length segment {parent}->{child}")
        self.edge = (parent, child)


class ConfigError(ValueError):
    """Bad run configuration (unknown key, unparsable value)."""
