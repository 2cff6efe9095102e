"""Exception types shared across the package."""


class PrivcutError(Exception):
    """Base class for errors raised by this package."""


class CapabilityError(PrivcutError):
    """An exact oracle or solver was asked for more than it can deliver.

    Raised instead of silently degrading, e.g. when an exhaustive
    enumeration would exceed its evaluation cap.
    """


class GraphParseError(PrivcutError):
    """A graph file could not be parsed.

    Attributes:
        line: 1-based line number of the offending line, or None.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DominatingSetViolation(PrivcutError):
    """The dominating-set property failed on a concrete instance.

    Carries a JSON-serializable counterexample report in ``report``.
    """

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report
