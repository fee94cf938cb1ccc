"""Typed errors raised by the public API."""


class InvalidInputError(ValueError):
    """An argument violates an operation's documented preconditions."""


class ParseError(ValueError):
    """A data file row could not be parsed; carries path and line number."""

    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = int(line_no)
        self.reason = reason


class EmptyDatasetError(ValueError):
    """No usable samples could be extracted from a data source."""


class IncompletePredictionsError(ValueError):
    """An external predictions file does not cover every (sample, step) cell."""
