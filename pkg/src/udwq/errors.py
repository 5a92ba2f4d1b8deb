"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`ConfigError` to exit code 2 and every
:class:`NumericalContractError` to exit code 3.
"""


class UDWQError(Exception):
    """Base class for all errors raised by :mod:`udwq`."""


class ConfigError(UDWQError):
    """Invalid experiment configuration or unsupported model choice."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalContractError(UDWQError):
    """A numerical invariant failed. ``invariant`` names the failing check."""

    invariant = "numerical contract"

    def __init__(self, message, invariant=None):
        if invariant is not None:
            self.invariant = invariant
        super().__init__(message)


class GridMismatchError(NumericalContractError):
    invariant = "shared k-grid"


class OutOfRangeError(NumericalContractError):
    invariant = "tabulated profile range"


class InvalidTableError(NumericalContractError):
    invariant = "bilinear table validity"


class NonPhysicalStateError(NumericalContractError):
    """Raised when an assembled density matrix is not positive semidefinite.

    Attributes:
        min_eigenvalue: the most negative eigenvalue found.
    """

    invariant = "density matrix positivity"

    def __init__(self, message, min_eigenvalue=None, invariant=None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message, invariant)


class PreconditionError(NumericalContractError):
    invariant = "operation precondition"


class NoSolutionError(NumericalContractError):
    invariant = "fine-tuning solvability"


class SingularSystemError(NumericalContractError):
    invariant = "Bob smearing solve"


class TruncationError(NumericalContractError):
    invariant = "Fock truncation adequacy"
