"""Exception hierarchy shared by the library and the command line."""


class Pent63Error(Exception):
    """Base class for every error raised by pent63."""

    exit_code = 1


class ArithmeticRangeError(Pent63Error, OverflowError):
    """Input outside the validated 64-bit arithmetic range."""


class ContractViolation(Pent63Error, ValueError):
    """An operation was called with arguments violating its precondition."""

    exit_code = 2


class CertificateNotFound(Pent63Error, KeyError):
    """No certificate is stored for the requested coefficient tuple."""

    exit_code = 2


class InconclusiveSearch(Pent63Error):
    """A budget-bounded search ran out of budget without finding anything."""


class WitnessNotFound(Pent63Error, RuntimeError):
    """The constructive pipeline produced no witness although one must exist."""


class ConfigurationError(Pent63Error):
    """Invalid run configuration (bad override, unreadable dataset path, ...)."""

    exit_code = 2


class ResourceError(Pent63Error, MemoryError):
    """A computation needs more memory than can be allocated."""

    exit_code = 3


class DatasetIntegrityError(Pent63Error):
    """The certificate dataset does not match its pinned content."""
