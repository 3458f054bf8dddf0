"""Exception types shared across the package."""


class FlowscapeError(Exception):
    """Base class for errors raised by flowscape operations."""


class GridSpecMismatch(FlowscapeError):
    """Inputs that must share one grid specification do not."""


class InsufficientData(FlowscapeError):
    """Not enough usable maps to assemble a data matrix."""


class SolverFailure(FlowscapeError):
    """The coefficient solver failed to converge on one column."""

    def __init__(self, column, message):
        super().__init__(f"column {column}: {message}")
        self.column = column


class DegenerateCluster(FlowscapeError):
    """A cluster's data matrix is all zero, so no basis exists."""


class InvalidExperiment(FlowscapeError):
    """An experiment specification cannot be realized as stated."""


class ParseError(FlowscapeError):
    """An input file does not match its expected format."""
