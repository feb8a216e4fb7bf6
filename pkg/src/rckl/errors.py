"""Exception types shared across the package."""


class RcklError(Exception):
    """Base class for package errors."""


class NonConvergenceError(RcklError):
    """An iterative eigensolver exhausted its iteration budget."""


class IndexOutOfRangeError(RcklError, IndexError):
    """An object index falls outside the kernel's dimension."""


class NonFiniteStepError(RcklError, ValueError):
    """A step magnitude was NaN or infinite."""


class InvalidPolicyParamError(RcklError, ValueError):
    """A step-size policy was built with out-of-range parameters."""


class InvalidDimsError(RcklError, ValueError):
    """Requested dimensions are too small to be meaningful."""


class DivergenceError(RcklError):
    """The batch objective blew up, signalling a too-large learning rate."""


class EmptySetError(RcklError, ValueError):
    """An operation that averages over a set received an empty one."""


class ParseError(RcklError, ValueError):
    """A triplet file row could not be parsed.

    Carries the 1-based line number of the offending row.
    """

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CountOverflowError(RcklError, ValueError):
    """Requested split sizes exceed the number of available rows."""
