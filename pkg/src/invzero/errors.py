"""Exception hierarchy shared by every module."""


class InvZeroError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(InvZeroError, ValueError):
    """Malformed, non-finite or dimensionally inconsistent input."""


class NumericalFailure(InvZeroError, ArithmeticError):
    """A dense kernel (eigensolver, SVD) failed to converge."""


class SingularMatrixError(NumericalFailure):
    """Matrix is singular or too ill-conditioned to invert."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class UndefinedRelativeDegree(InvZeroError):
    """An output is decoupled from every input."""

    def __init__(self, message, output_index):
        super().__init__(message)
        self.output_index = output_index


class DecompositionNotApplicable(InvZeroError):
    """The invariant zero form cannot be built for this system."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class StructureViolation(InvZeroError):
    """Transformed matrices do not show the expected sparse structure."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class OracleNotApplicable(InvZeroError):
    """The determinant-interpolation oracle cannot be used for this pencil."""


class MethodFailure(InvZeroError):
    """No computational route succeeded for the given system."""


class VerificationFailure(InvZeroError):
    """Candidate zeros were produced but none survived the rank-drop check."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates
