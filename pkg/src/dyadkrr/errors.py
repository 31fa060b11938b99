"""Exception types shared across the package.

Every error raised by the library derives from :class:`DyadkrrError` so that
callers (notably the CLI) can separate data/numerical failures from plain
usage bugs.
"""


class DyadkrrError(Exception):
    """Base class for all library errors."""


class InvalidInputError(DyadkrrError, ValueError):
    """Input data violates a precondition (shape, finiteness, symmetry, ids)."""


class InvalidParameterError(DyadkrrError, ValueError):
    """A tuning parameter is out of its admissible range."""


class CapacityError(DyadkrrError):
    """A requested dense materialization exceeds the configured cap."""


class NumericalDegeneracyError(DyadkrrError):
    """A quantity that must be invertible/positive collapsed numerically."""


class SingularFilterError(DyadkrrError):
    """The unregularized filter was evaluated on a zero eigenvalue."""


class UndefinedMetricError(DyadkrrError):
    """The requested metric is undefined on the given data (e.g. all ties)."""


class InvalidPlanError(DyadkrrError):
    """An experiment plan is inconsistent with the available data."""


class DataFormatError(DyadkrrError):
    """A file could not be parsed; message carries line/column diagnostics."""
