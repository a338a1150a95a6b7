"""Exception types shared across the package."""


class SpectrexError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(SpectrexError, ValueError):
    """Incompatible matrix or tuple dimensions."""


class AsymmetryError(SpectrexError, ValueError):
    """Input matrix fails the symmetry requirement.

    Carries the coordinates of the worst violation so callers can report
    exactly which entry broke symmetry.
    """

    def __init__(self, mat_index, i, j, violation):
        self.mat_index = mat_index
        self.i = i
        self.j = j
        self.violation = violation
        super().__init__(
            f"matrix {mat_index} asymmetric at ({i},{j}): |M[i,j]-M[j,i]| = {violation}"
        )


class OutsideDomainError(SpectrexError, ValueError):
    """A point lies outside the spectrahedron beyond the allowed slack."""

    def __init__(self, min_eigenvalue, slack):
        self.min_eigenvalue = min_eigenvalue
        self.slack = slack
        super().__init__(
            f"pencil evaluation has min eigenvalue {min_eigenvalue} < -{slack}"
        )


class SolverError(SpectrexError, RuntimeError):
    """An internal optimization solver failed in an unrecoverable way."""


class UnboundedDomainError(SpectrexError, ValueError):
    """The spectrahedron is unbounded where boundedness is required.

    witness, when provided, is a direction along which the domain escapes.
    """

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)
