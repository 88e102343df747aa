"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class PermestError(Exception):
    """Base class for all library errors."""


class ConfigurationError(PermestError, ValueError):
    """Inconsistent parameters: shape mismatches, bad trial counts, bad specs."""


class DomainError(PermestError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. negative entries)."""


class SizeError(PermestError, ValueError):
    """Matrix too large for an exact oracle."""


class DegenerateInputError(PermestError, ValueError):
    """Rank-deficient input where full rank is required."""


class MatrixParseError(PermestError, ValueError):
    """Malformed matrix file. Carries the 1-based line and column of the fault."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(where + message)
