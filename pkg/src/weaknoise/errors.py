"""Exception types raised across the package."""


class WeakNoiseError(Exception):
    """Base class for all package errors."""


class A1Violated(WeakNoiseError, ValueError):
    """The cost exponents violate the high-SNR condition; closed forms do not apply."""


class DimensionTooLarge(WeakNoiseError, ValueError):
    pass


class DegenerateGrid(WeakNoiseError, ValueError):
    pass


class OutOfRange(WeakNoiseError, ValueError):
    pass


class DimensionMismatch(WeakNoiseError, ValueError):
    pass


class EmptyPath(WeakNoiseError, ValueError):
    pass


class ZeroVariance(WeakNoiseError, ValueError):
    pass


class NonpositiveCost(WeakNoiseError, ValueError):
    pass


class CodebookTooLarge(WeakNoiseError, ValueError):
    pass


class CodebookCollision(WeakNoiseError, RuntimeError):
    """Two messages were assigned the same codeword."""


class AllOutage(WeakNoiseError, RuntimeError):
    """Some probe produced no non-outage trial, so its conditional cost is undefined.

    ``summary`` and ``table`` carry the results computed before the failure
    was detected.
    """

    def __init__(self, message, summary=None, table=None):
        super().__init__(message)
        self.summary = summary
        self.table = table
