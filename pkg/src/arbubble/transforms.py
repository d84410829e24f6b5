"""Coordinate charts that reduce the pricing equation to constant coefficients.

Two charts, one per stochastic bubble family.  Both send (S, f, t) through a
drift-removed log-underlying u = ln S - (r - sigma^2/2) t and pair it with a
scaled bubble coordinate; their half-sum/half-difference (x, y) diagonalize
the rank-1 diffusion so that all second-order content lives in x alone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import GaussianBubble, LognormalBubble, MarketParams


@dataclass(frozen=True)
class GaussCoords:
    x_bar: object
    y_bar: object
    tau: object


@dataclass(frozen=True)
class LognCoords:
    x: object
    y: object
    tau: object


def _u_bar(S, t, params: MarketParams):
    return np.log(S) - (params.r - 0.5 * params.sigma**2) * t


def gauss_forward(S, f, t, params: MarketParams, bubble: GaussianBubble,
                  T: float) -> GaussCoords:
    """Chart for the arithmetic bubble.

    x_bar = (u/sigma + f/Gamma)/2 - mu_f t/(2 Gamma)
    y_bar = (u/sigma - f/Gamma)/2 + mu_f t/(2 Gamma)
    tau   = T - t
    """
    S = np.asarray(S, dtype=float)
    if np.any(S <= 0.0):
        raise DomainError("S must be positive")
    if bubble.gamma == 0.0:
        raise DomainError("gauss chart requires gamma > 0")
    if np.any((np.asarray(t) < 0) | (np.asarray(t) > T)):
        raise DomainError("t must lie in [0, T]")
    u = _u_bar(S, t, params)
    a = u / params.sigma
    b = (np.asarray(f, dtype=float) - bubble.mu_f * np.asarray(t)) / bubble.gamma
    return GaussCoords(x_bar=0.5 * (a + b), y_bar=0.5 * (a - b), tau=T - np.asarray(t))


def gauss_inverse(c: GaussCoords, params: MarketParams, bubble: GaussianBubble,
                  T: float):
    """Exact algebraic inverse of gauss_forward; returns (S, f, t)."""
    t = T - np.asarray(c.tau)
    u = params.sigma * (np.asarray(c.x_bar) + np.asarray(c.y_bar))
    S = np.exp(u + (params.r - 0.5 * params.sigma**2) * t)
    f = bubble.gamma * (np.asarray(c.x_bar) - np.asarray(c.y_bar)) + bubble.mu_f * t
    return S, f, t


def f_of_gauss_coords(c: GaussCoords, bubble: GaussianBubble, T: float):
    """Bubble level implied by the chart point: Gamma (x_bar - y_bar) + mu_f (T - tau).

    The sign of the drift term is fixed by requiring consistency with
    gauss_forward (this map composed with the forward chart must return the
    input f identically).
    """
    return (bubble.gamma * (np.asarray(c.x_bar) - np.asarray(c.y_bar))
            + bubble.mu_f * (T - np.asarray(c.tau)))


def logn_forward(S, f, t, params: MarketParams, bubble: LognormalBubble,
                 T: float) -> LognCoords:
    """Chart for the relative-coefficient bubble; requires f > 0."""
    S = np.asarray(S, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(S <= 0.0):
        raise DomainError("S must be positive")
    if np.any(f <= 0.0):
        raise DomainError("lognormal chart requires f > 0")
    if bubble.gamma_bar == 0.0:
        raise DomainError("logn chart requires gamma_bar > 0")
    if np.any((np.asarray(t) < 0) | (np.asarray(t) > T)):
        raise DomainError("t must lie in [0, T]")
    u = _u_bar(S, t, params)
    v = np.log(f) - (bubble.mu_f_bar - 0.5 * bubble.gamma_bar**2) * np.asarray(t)
    a = u / params.sigma
    b = v / bubble.gamma_bar
    return LognCoords(x=0.5 * (a + b), y=0.5 * (a - b), tau=T - np.asarray(t))


def logn_inverse(c: LognCoords, params: MarketParams, bubble: LognormalBubble,
                 T: float):
    t = T - np.asarray(c.tau)
    u = params.sigma * (np.asarray(c.x) + np.asarray(c.y))
    v = bubble.gamma_bar * (np.asarray(c.x) - np.asarray(c.y))
    S = np.exp(u + (params.r - 0.5 * params.sigma**2) * t)
    f = np.exp(v + (bubble.mu_f_bar - 0.5 * bubble.gamma_bar**2) * t)
    return S, f, t


def f_of_logn_coords(c: LognCoords, bubble: LognormalBubble, T: float):
    """exp(Gamma_bar (x - y) + (mu_f_bar - Gamma_bar^2/2)(T - tau)); always > 0."""
    return np.exp(bubble.gamma_bar * (np.asarray(c.x) - np.asarray(c.y))
                  + (bubble.mu_f_bar - 0.5 * bubble.gamma_bar**2)
                  * (T - np.asarray(c.tau)))


def f0_gaussian(S, S_prime, f, tau, params: MarketParams, bubble: GaussianBubble,
                alpha_y_bar: float):
    """Bubble value at the integration point after the delta collapse.

    f0 = f - (Gamma/sigma) ln(S/S') - 2 Gamma alpha_y_bar tau
    """
    return (np.asarray(f, dtype=float)
            - (bubble.gamma / params.sigma) * np.log(np.asarray(S) / np.asarray(S_prime))
            - 2.0 * bubble.gamma * alpha_y_bar * tau)


def f0_lognormal(S, S_prime, f, tau, params: MarketParams, bubble: LognormalBubble,
                 alpha_y: float):
    """f0 = f (S'/S)^(Gamma_bar/sigma) exp(-2 Gamma_bar alpha_y tau); positive for f > 0."""
    ratio = np.asarray(S_prime, dtype=float) / np.asarray(S, dtype=float)
    return (np.asarray(f, dtype=float)
            * ratio ** (bubble.gamma_bar / params.sigma)
            * np.exp(-2.0 * bubble.gamma_bar * alpha_y * tau))
