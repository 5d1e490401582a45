"""Exception types raised across the package."""


class WCRiskError(Exception):
    """Base class for all package errors."""


class InvalidSpectrumError(WCRiskError, ValueError):
    """A risk spectrum fails an admissibility check."""


class InfeasibleError(WCRiskError):
    """Raised when a linear program or portfolio problem has no feasible point."""


class UnboundedError(WCRiskError):
    """Raised when a linear program is unbounded."""


class CertificateError(WCRiskError):
    """An internally constructed certificate failed its own verification."""


class NonAttainmentError(WCRiskError):
    """The worst case is a supremum that the closed-form construction cannot attain."""


class InputError(WCRiskError, ValueError):
    """A data or problem file is malformed; the message names the line or field."""
