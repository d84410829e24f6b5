"""Market, bubble, and contract data types plus the arbitrage potential.

The model couples the underlying dS = S mu dt + S sigma dW with a bubble
process df = mu_f dt + Gamma dW driven by the *same* Brownian motion.  The
pricing equation then carries the potential v(f) = (r - mu) f / (sigma - f)
and the effective bubble drift mu_f - (mu - r) Gamma / (sigma - f).  Both
diverge at f = sigma, so every evaluation takes an explicit singular-band
half-width eps_sing and refuses points inside it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, SingularBand

#: Default singular-band half-width as a fraction of sigma.
EPS_SING_FACTOR = 1e-3


def default_eps_sing(sigma: float) -> float:
    return EPS_SING_FACTOR * sigma


@dataclass(frozen=True)
class MarketParams:
    """Underlying drift mu, volatility sigma, and risk-free rate r."""

    mu: float
    sigma: float
    r: float

    def __post_init__(self):
        if not np.isfinite([self.mu, self.sigma, self.r]).all():
            raise DomainError("market parameters must be finite")
        if self.sigma < 0.0:
            raise DomainError(f"sigma must be nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class DeterministicBubble:
    """Bubble prescribed as a function f(S, t); no own noise."""

    f: Callable[[float, float], float]


@dataclass(frozen=True)
class GaussianBubble:
    """Arithmetic bubble: df = mu_f dt + gamma dW with constant coefficients."""

    mu_f: float
    gamma: float

    def __post_init__(self):
        if self.gamma < 0.0:
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class LognormalBubble:
    """Relative-coefficient bubble: df = f mu_f_bar dt + f gamma_bar dW.

    Stays positive; only meaningful for f > 0.
    """

    mu_f_bar: float
    gamma_bar: float

    def __post_init__(self):
        if self.gamma_bar < 0.0:
            raise DomainError(f"gamma_bar must be nonnegative, got {self.gamma_bar}")


@dataclass(frozen=True)
class GenericBubble:
    """State-dependent coefficients mu_f(S, f, t) and gamma(S, f, t)."""

    mu_f: Callable[..., float]
    gamma: Callable[..., float]


BubbleModel = Union[DeterministicBubble, GaussianBubble, LognormalBubble, GenericBubble]


@dataclass(frozen=True)
class Contract:
    """European payoff Phi(S, f) paid at expiry T.

    ``strike`` is optional metadata: closed forms require it, and the PDE
    solvers use its presence to select call-type boundary rows.
    """

    expiry: float
    payoff: Callable[[np.ndarray, np.ndarray], np.ndarray]
    strike: Optional[float] = None

    def __post_init__(self):
        if self.expiry <= 0.0:
            raise DomainError(f"expiry must be positive, got {self.expiry}")


def call_contract(strike: float, expiry: float) -> Contract:
    """Pure call max(S - K, 0); the payoff ignores the bubble level."""
    if strike <= 0.0:
        raise DomainError(f"strike must be positive, got {strike}")

    def payoff(S, f):
        return np.maximum(np.asarray(S, dtype=float) - strike, 0.0)

    return Contract(expiry=expiry, payoff=payoff, strike=strike)


class Regime(enum.Enum):
    """Asymptotic band of the bubble-to-volatility ratio f/sigma."""

    WEAK = "weak"
    STRONG = "strong"
    NEG_SIGMA = "negsigma"
    FULL = "full"


@dataclass(frozen=True)
class RegimeThresholds:
    """Dimensionless bounds on f/sigma delimiting the asymptotic bands."""

    low: float = 0.05
    high: float = 10.0


def bubble_coefficients(bubble: BubbleModel, S, f, t):
    """Evaluate (mu_f, Gamma) for any bubble variant; vectorized over S, f."""
    if isinstance(bubble, GaussianBubble):
        shape = np.broadcast(np.asarray(S), np.asarray(f)).shape
        return np.full(shape, bubble.mu_f), np.full(shape, bubble.gamma)
    if isinstance(bubble, LognormalBubble):
        f = np.asarray(f, dtype=float)
        if np.any(f <= 0.0):
            raise DomainError("lognormal bubble requires f > 0")
        return bubble.mu_f_bar * f, bubble.gamma_bar * f
    if isinstance(bubble, GenericBubble):
        return (np.asarray(bubble.mu_f(S, f, t), dtype=float),
                np.asarray(bubble.gamma(S, f, t), dtype=float))
    raise DomainError(f"bubble variant without stochastic coefficients: {bubble!r}")


def _check_band(f, sigma: float, eps_sing: float):
    if np.any(np.abs(sigma - np.asarray(f, dtype=float)) <= eps_sing):
        raise SingularBand(
            f"evaluation inside the singular band |sigma - f| <= {eps_sing:g}"
        )


def potential_v(f, params: MarketParams, eps_sing: Optional[float] = None):
    """Arbitrage potential v(f) = (r - mu) f / (sigma - f).

    Vanishes at f = 0, tends to -(r - mu) as f -> inf, and diverges at
    f = sigma.  Raises SingularBand inside |sigma - f| <= eps_sing.
    """
    if eps_sing is None:
        eps_sing = default_eps_sing(params.sigma)
    _check_band(f, params.sigma, eps_sing)
    arr = np.asarray(f, dtype=float)
    out = (params.r - params.mu) * arr / (params.sigma - arr)
    return float(out) if np.isscalar(f) or np.ndim(f) == 0 else out


def effective_f_drift(S, f, t, params: MarketParams, bubble: BubbleModel,
                      eps_sing: Optional[float] = None):
    """Drift of f in the pricing equation: mu_f - (mu - r) Gamma / (sigma - f)."""
    if eps_sing is None:
        eps_sing = default_eps_sing(params.sigma)
    _check_band(f, params.sigma, eps_sing)
    mu_f, gamma = bubble_coefficients(bubble, S, f, t)
    arr = np.asarray(f, dtype=float)
    out = mu_f - (params.mu - params.r) * gamma / (params.sigma - arr)
    return float(out) if np.isscalar(f) or np.ndim(f) == 0 else out


def classify_regime(f: float, sigma: float,
                    thresholds: RegimeThresholds = RegimeThresholds()) -> Regime:
    """Deterministic tag for the asymptotic band containing f/sigma."""
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    ratio = f / sigma
    if abs(ratio) <= thresholds.low:
        return Regime.WEAK
    if ratio >= thresholds.high:
        return Regime.STRONG
    if abs(ratio + 1.0) <= thresholds.low:
        return Regime.NEG_SIGMA
    return Regime.FULL
