"""Exception hierarchy shared by every module of the package."""


class FixpointError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(FixpointError, ValueError):
    pass


class OperatorEvaluationError(FixpointError, ArithmeticError):
    """An operator produced a non-finite value at some atom."""

    def __init__(self, message, atom=None):
        super().__init__(message)
        self.atom = atom


class PreconditionViolation(FixpointError):
    pass


class SetViolation(FixpointError):
    """A computed iterate left the convex set it was supposed to stay in."""


class CertificationError(FixpointError):
    """Raised when a command refuses to run an operator that failed certification."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report
