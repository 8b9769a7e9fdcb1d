"""Exception types raised across the package."""


class ParameterError(ValueError):
    """Invalid argument combination for a generator or design."""


class ParseError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f" line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class InconsistentProbabilityError(ValueError):
    """A unit was realized in a condition whose estimated probability is zero."""


class UndefinedEstimateError(ValueError):
    """An estimate was requested for an empty condition or cell."""
