"""Exception types shared across the package."""


class ArbubbleError(Exception):
    """Base class for all package-specific errors."""


class SingularBand(ArbubbleError):
    """Raised when a coefficient is requested inside |sigma - f| <= eps_sing.

    The potential diverges at f = sigma; evaluation there is refused rather
    than clamped.
    """


class DomainError(ArbubbleError):
    """Invalid state or grid input (non-positive S, f <= 0 for lognormal, ...)."""


class Unsupported(ArbubbleError):
    """Requested a combination the model does not define."""


class NonIntegrablePayoff(ArbubbleError):
    """Payoff grows faster than linearly on the sampled quadrature domain."""


class InstabilityDetected(ArbubbleError):
    """A PDE solve produced values far beyond the payoff bound."""


class TooFewPaths(ArbubbleError):
    """Not enough non-absorbed Monte Carlo paths to form an estimate."""
