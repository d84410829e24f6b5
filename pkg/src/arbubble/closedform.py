"""Analytic call prices for the asymptotic regimes, plus reference pricers.

Every asymptotic regime shares one kernel solution

    psi = exp(sigma*A*tau + sigma^2*tau/2) * S * N(d1) - E * N(d2),
    d1  = [ln(S/E) + sigma*A*tau + sigma^2*tau] / (sigma*sqrt(tau)),
    d2  = d1 - sigma*sqrt(tau),

where A = alpha_x + alpha_y is the regime's drift-coefficient sum.  The
regime then only selects (alpha_x, alpha_y) and the discount wrapper:
weak exp(-r tau), strong exp(-mu tau), neg-sigma exp(-(r+mu) tau/2).

The weak-regime price deliberately does *not* reduce to the textbook
Black-Scholes call (different d-arguments and discount structure); the
textbook formula is provided separately as `bs_reference` because the
deterministic-bubble limits of the PDE solvers converge to it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import Unsupported
from .model import (BubbleModel, GaussianBubble, LognormalBubble, MarketParams,
                    Regime)


def norm_cdf(z):
    """Standard normal CDF N(z)."""
    out = ndtr(np.asarray(z, dtype=float))
    return float(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class AlphaPair:
    """Constant drift coefficients along x and y in the reduced equation."""

    alpha_x: float
    alpha_y: float

    @property
    def total(self) -> float:
        return self.alpha_x + self.alpha_y


def _model_tag(model) -> str:
    if isinstance(model, str):
        tag = model.lower()
    elif isinstance(model, GaussianBubble) or model is GaussianBubble:
        tag = "gaussian"
    elif isinstance(model, LognormalBubble) or model is LognormalBubble:
        tag = "lognormal"
    else:
        raise Unsupported(f"no asymptotic solution family for model {model!r}")
    if tag not in ("gaussian", "lognormal"):
        raise Unsupported(f"no asymptotic solution family for model {model!r}")
    return tag


def alphas_for(regime: Regime, model, params: MarketParams) -> AlphaPair:
    """Regime drift pair.  Weak sums to zero, strong to -(r-mu)/sigma.

    The neg-sigma band exists only for the Gaussian bubble: the lognormal
    bubble cannot reach f = -sigma.
    """
    tag = _model_tag(model)
    if params.sigma == 0.0:
        raise Unsupported("asymptotic regimes need sigma > 0")
    half = (params.r - params.mu) / (2.0 * params.sigma)
    if regime is Regime.WEAK:
        return AlphaPair(half, -half)
    if regime is Regime.STRONG:
        return AlphaPair(-half, -half)
    if regime is Regime.NEG_SIGMA:
        if tag != "gaussian":
            raise Unsupported("neg-sigma band is undefined for the lognormal bubble")
        return AlphaPair(0.0, -half)
    raise Unsupported(f"no asymptotic alpha pair for regime {regime}")


def discount_factor(regime: Regime, tau: float, params: MarketParams) -> float:
    if regime is Regime.WEAK:
        return float(np.exp(-params.r * tau))
    if regime is Regime.STRONG:
        return float(np.exp(-params.mu * tau))
    if regime is Regime.NEG_SIGMA:
        return float(np.exp(-0.5 * (params.r + params.mu) * tau))
    raise Unsupported(f"no asymptotic discount for regime {regime}")


def psi_call(S, strike: float, sigma: float, tau: float, alpha_sum: float):
    """Kernel-frame call value; tau = 0 returns the raw payoff."""
    S = np.asarray(S, dtype=float)
    if tau == 0.0:
        out = np.maximum(S - strike, 0.0)
        return float(out) if out.ndim == 0 else out
    st = sigma * np.sqrt(tau)
    shift = sigma * alpha_sum * tau
    d1 = (np.log(S / strike) + shift + sigma**2 * tau) / st
    d2 = d1 - st
    out = np.exp(shift + 0.5 * sigma**2 * tau) * S * ndtr(d1) - strike * ndtr(d2)
    return float(out) if out.ndim == 0 else out


def price_call(regime: Regime, model, S, f, tau: float, params: MarketParams,
               bubble: BubbleModel, strike: float):
    """Discounted asymptotic call price.

    The bubble level f does not enter: the pure call's f-dependence collapses
    when the propagator's delta constraint is applied.  The argument is kept
    so all pricing engines share a calling convention.
    """
    pair = alphas_for(regime, model, params)
    if tau == 0.0:
        S = np.asarray(S, dtype=float)
        out = np.maximum(S - strike, 0.0)
        return float(out) if out.ndim == 0 else out
    disc = discount_factor(regime, tau, params)
    return disc * psi_call(S, strike, params.sigma, tau, pair.total)


def price_bond(regime: Regime, tau: float, params: MarketParams) -> float:
    """Unit zero-coupon value: the constant payoff survives the kernel unchanged."""
    return discount_factor(regime, tau, params)


def bs_reference(S, strike: float, tau: float, rate_like: float, sigma: float):
    """Textbook Black-Scholes call with an arbitrary rate.

    Oracle for the deterministic-bubble limits: the f -> 0 limit prices at
    rate r, the f -> infinity limit at rate mu.
    """
    S = np.asarray(S, dtype=float)
    if tau == 0.0:
        out = np.maximum(S - strike, 0.0)
        return float(out) if out.ndim == 0 else out
    if sigma == 0.0:
        out = np.maximum(S - strike * np.exp(-rate_like * tau), 0.0)
        return float(out) if out.ndim == 0 else out
    st = sigma * np.sqrt(tau)
    d1 = (np.log(S / strike) + (rate_like + 0.5 * sigma**2) * tau) / st
    d2 = d1 - st
    out = S * ndtr(d1) - strike * np.exp(-rate_like * tau) * ndtr(d2)
    return float(out) if out.ndim == 0 else out
