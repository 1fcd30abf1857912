"""Exception hierarchy for the laboratory.

Every error carries the process exit code the CLI reports for it.
"""


class LabError(Exception):
    """Base class for all laboratory errors."""

    exit_code = 1


class ParameterError(LabError, ValueError):
    """Bad parameters or a request outside the supported regime."""

    exit_code = 2


class DegenerateGridError(ParameterError):
    """Grid has no interior node."""


class GridMismatchError(ParameterError):
    """Fields living on different grids were combined."""


class ConstraintError(ParameterError):
    """Mass constraint violated where it is required."""


class OracleTooLargeError(ParameterError):
    """Reference (dense or brute-force) path requested on a grid that is too large."""


class ResolutionError(ParameterError):
    """Field features fall below the grid resolution or outside the target grid."""


class SampleRangeError(ParameterError):
    """Radial samples do not extend far enough for the requested check."""


class ConvergenceError(LabError, RuntimeError):
    """An iterative method failed."""

    exit_code = 3


class IterationLimitError(ConvergenceError):
    """Maximum number of iterations reached."""


class BracketError(ConvergenceError):
    """No sign change found in the scanned range."""


class ShootingError(ConvergenceError):
    """Shooting bracket for the ground state could not be established."""


class RefinementError(ConvergenceError):
    """Saddle refinement diverged."""


class FieldFormatError(LabError, IOError):
    """Field file header and payload are inconsistent."""

    exit_code = 4
