"""Exception hierarchy for conecalc."""


class ConecalcError(Exception):
    """Base class for all errors raised by conecalc."""


class InvalidParameterError(ConecalcError, ValueError):
    """An argument is outside its admissible range."""


class DomainError(ConecalcError, ValueError):
    """A function was evaluated at a point outside its domain of holomorphy."""


class BudgetExceededError(ConecalcError):
    """The node budget cannot reach the requested tolerance.

    ``achievable`` holds the error bound the budget could deliver.
    """

    def __init__(self, msg, achievable):
        super().__init__(msg)
        self.achievable = achievable


class SpectrumError(ConecalcError):
    """The spectrum meets a region where the resolvent must exist.

    ``point`` is the offending spectral parameter (or eigenvalue).
    """

    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


class UnsupportedError(ConecalcError):
    """The requested operation is not defined for this input."""


class CertificateError(ConecalcError):
    """A function's decay certificate is incompatible with the contour."""


class TruncationError(ConecalcError):
    """The tip truncation is so deep that the assembled matrix overflows."""


class StepSizeError(ConecalcError):
    """A time step produced non-finite values."""
