"""Exception hierarchy shared by the whole kernel.

Exit-code mapping used by the CLI: input problems -> 2, scheme/arity
problems -> 3, numerical degeneracies -> 4.
"""


class PNSubdError(Exception):
    """Base class for all kernel errors."""


class InputError(PNSubdError):
    """Malformed or insufficient input data (CLI exit code 2)."""


class SchemeError(PNSubdError):
    """Scheme selection or mesh/scheme incompatibility (CLI exit code 3)."""


class NumericError(PNSubdError):
    """Numerical degeneracy detected during computation (CLI exit code 4)."""


# -- input ------------------------------------------------------------------

class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IndexOutOfRange(InputError):
    pass


class TooFewPoints(InputError):
    pass


class TopologyMismatch(InputError):
    pass


# -- scheme -----------------------------------------------------------------

class UnknownScheme(SchemeError):
    pass


class UnsupportedScheme(SchemeError):
    pass


class UnsupportedVariant(SchemeError):
    pass


class WrongFaceArity(SchemeError):
    pass


class NotAffine(SchemeError):
    pass


# -- numeric ----------------------------------------------------------------

class NotDivisible(NumericError):
    """Symbol lacks the requested smoothing factor."""


class DegenerateAverage(NumericError):
    """A stencil's normal average vanished without a zero-normal excuse."""


class DegenerateTangents(NumericError):
    """Subdominant eigen-coordinates are (nearly) parallel."""


class NotDiagonalizable(NumericError):
    pass


class ComplexClampFailure(NumericError):
    pass


class LayoutMismatch(NumericError):
    pass


class FitDiverged(NumericError):
    pass


class NonPositiveEntry(NumericError):
    pass


class DegenerateFace(UserWarning):
    """Zero-area face met during normal estimation (warning, not an error)."""


class DegenerateNormalWarning(UserWarning):
    """Mesh refinement met a vanishing normal average and fell back to the
    linear rule for the affected vertices."""
