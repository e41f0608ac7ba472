"""Exception types shared across the package."""
import numpy as np


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Invalid or degenerate system configuration."""


class ContractError(ValueError):
    """Arguments violate a shape or precondition contract."""


class HistoryUnderflow(LookupError):
    """Not enough past anchor estimates to form the requested window."""


class NumericalRankError(np.linalg.LinAlgError):
    """Covariance could not be factorized even at the jitter cap.

    Attributes
    ----------
    min_eigenvalue : float
        Smallest eigenvalue estimate of the (symmetrized) input.
    jitter : float
        Largest jitter tried.
    """

    def __init__(self, message, min_eigenvalue, jitter):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.jitter = jitter
